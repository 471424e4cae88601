#include "imgk/csv_io.hpp"

#include <charconv>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <limits>
#include <map>
#include <sstream>

namespace imgk {

namespace {

std::vector<std::string> split(const std::string& line) {
    std::vector<std::string> out;
    std::string cell;
    std::stringstream ss(line);
    while (std::getline(ss, cell, ',')) {
        if (!cell.empty() && cell.back() == '\r') cell.pop_back();
        out.push_back(cell);
    }
    if (!line.empty() && line.back() == ',') out.emplace_back();
    return out;
}

struct Table {
    std::map<std::string, std::size_t> index;
    std::vector<std::vector<std::string>> rows;
    std::vector<std::size_t> line_numbers;
};

Table load(const std::filesystem::path& path, const std::vector<std::string>& required) {
    std::ifstream in(path);
    if (!in) throw std::runtime_error("cannot open " + path.string());
    Table t;
    std::string line;
    if (!std::getline(in, line)) throw SchemaError("", path.string() + ": empty file");
    const auto header = split(line);
    for (std::size_t i = 0; i < header.size(); ++i) t.index[header[i]] = i;
    for (const auto& col : required)
        if (!t.index.count(col)) throw SchemaError(col, path.string() + ": missing column '" + col + "'");
    std::size_t lineno = 1;
    while (std::getline(in, line)) {
        ++lineno;
        if (line.empty() || line == "\r") continue;
        auto cells = split(line);
        if (cells.size() != header.size())
            throw SchemaError("", path.string() + ":" + std::to_string(lineno) + ": expected " +
                                      std::to_string(header.size()) + " fields, found " + std::to_string(cells.size()));
        t.rows.push_back(std::move(cells));
        t.line_numbers.push_back(lineno);
    }
    return t;
}

class RowReader {
public:
    RowReader(const Table& t, std::size_t r, const std::filesystem::path& path) : t_(t), r_(r), path_(path) {}

    const std::string& text(const std::string& col) const { return t_.rows[r_][t_.index.at(col)]; }

    double number(const std::string& col) const {
        const auto& s = text(col);
        double v = 0.0;
        auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
        if (s.empty() || ec != std::errc() || ptr != s.data() + s.size() || !std::isfinite(v)) fail(col, s);
        return v;
    }

    double optional_number(const std::string& col) const {
        const auto& s = text(col);
        if (s.empty() || s == "NA" || s == "NaN" || s == "nan") return std::numeric_limits<double>::quiet_NaN();
        return number(col);
    }

    int integer(const std::string& col) const {
        const double v = number(col);
        if (v != std::floor(v)) fail(col, text(col));
        return static_cast<int>(v);
    }

    int binary(const std::string& col) const {
        const int v = integer(col);
        if (v != 0 && v != 1) fail(col, text(col));
        return v;
    }

    [[noreturn]] void fail(const std::string& col, const std::string& value) const {
        throw SchemaError(col, path_.string() + ":" + std::to_string(t_.line_numbers[r_]) + ": bad value '" + value +
                                   "' in column '" + col + "'");
    }

private:
    const Table& t_;
    std::size_t r_;
    const std::filesystem::path& path_;
};

std::string num(double v) {
    if (std::isnan(v)) return "NA";
    char buf[32];
    std::snprintf(buf, sizeof buf, "%.17g", v);
    return buf;
}

}  // namespace

std::vector<std::string> exp1_columns() {
    std::vector<std::string> cols = {"participant_id", "product_id", "y", "k1", "k2"};
    for (const char* c : stats::kCovariateNames) cols.push_back(std::string("x1_") + c);
    for (const char* c : stats::kCovariateNames) cols.push_back(std::string("x2_") + c);
    return cols;
}

std::vector<std::string> exp2_columns() {
    return {"participant_id", "product_id", "brand_id", "set_id", "purchase", "decision_time_s", "k", "price", "n_images"};
}

std::vector<stats::ChoiceRow> read_exp1_csv(const std::filesystem::path& path) {
    const auto t = load(path, exp1_columns());
    std::vector<stats::ChoiceRow> rows;
    rows.reserve(t.rows.size());
    for (std::size_t r = 0; r < t.rows.size(); ++r) {
        const RowReader in(t, r, path);
        stats::ChoiceRow row;
        row.participant_id = in.text("participant_id");
        row.product_id = in.text("product_id");
        row.y = in.binary("y");
        row.k1 = in.number("k1");
        row.k2 = in.number("k2");
        for (const char* c : stats::kCovariateNames) row.x1.push_back(in.optional_number(std::string("x1_") + c));
        for (const char* c : stats::kCovariateNames) row.x2.push_back(in.optional_number(std::string("x2_") + c));
        if (row.k1 < 2) in.fail("k1", in.text("k1"));
        if (row.k2 < 2) in.fail("k2", in.text("k2"));
        rows.push_back(std::move(row));
    }
    return rows;
}

void write_exp1_csv(const std::vector<stats::ChoiceRow>& rows, const std::filesystem::path& path) {
    std::ofstream out(path, std::ios::trunc);
    if (!out) throw std::runtime_error("cannot write " + path.string());
    const auto cols = exp1_columns();
    for (std::size_t i = 0; i < cols.size(); ++i) out << (i ? "," : "") << cols[i];
    out << '\n';
    for (const auto& r : rows) {
        out << r.participant_id << ',' << r.product_id << ',' << r.y << ',' << num(r.k1) << ',' << num(r.k2);
        for (double v : r.x1) out << ',' << num(v);
        for (double v : r.x2) out << ',' << num(v);
        out << '\n';
    }
}

std::vector<stats::PanelRow> read_exp2_csv(const std::filesystem::path& path) {
    const auto t = load(path, exp2_columns());
    std::vector<stats::PanelRow> rows;
    rows.reserve(t.rows.size());
    for (std::size_t r = 0; r < t.rows.size(); ++r) {
        const RowReader in(t, r, path);
        stats::PanelRow row;
        row.participant_id = in.text("participant_id");
        row.product_id = in.text("product_id");
        row.brand_id = in.text("brand_id");
        row.set_id = in.text("set_id");
        row.purchase = in.binary("purchase");
        row.decision_time = in.number("decision_time_s");
        row.k = in.number("k");
        row.price = in.number("price");
        row.n_images = in.integer("n_images");
        if (!(row.decision_time > 0.0)) in.fail("decision_time_s", in.text("decision_time_s"));
        if (row.n_images < 1) in.fail("n_images", in.text("n_images"));
        rows.push_back(std::move(row));
    }
    return rows;
}

void write_exp2_csv(const std::vector<stats::PanelRow>& rows, const std::filesystem::path& path) {
    std::ofstream out(path, std::ios::trunc);
    if (!out) throw std::runtime_error("cannot write " + path.string());
    const auto cols = exp2_columns();
    for (std::size_t i = 0; i < cols.size(); ++i) out << (i ? "," : "") << cols[i];
    out << '\n';
    for (const auto& r : rows)
        out << r.participant_id << ',' << r.product_id << ',' << r.brand_id << ',' << r.set_id << ',' << r.purchase
            << ',' << num(r.decision_time) << ',' << num(r.k) << ',' << num(r.price) << ',' << r.n_images << '\n';
}

}  // namespace imgk
