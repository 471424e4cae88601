#include <algorithm>
#include <cstdio>
#include <sstream>

#include "imgk/stats.hpp"

namespace imgk::stats {

namespace {

std::string fixed(double v, int digits) {
    char buf[64];
    std::snprintf(buf, sizeof buf, "%.*f", digits, v);
    return buf;
}

struct Row {
    std::string label;
    std::vector<std::string> cells;
};

// Row-label column plus one right-aligned column per fit.
std::string render(const std::string& title, const std::vector<Row>& rows, std::size_t columns) {
    std::size_t label_w = title.size();
    std::size_t cell_w = 4;
    for (const auto& r : rows) {
        label_w = std::max(label_w, r.label.size());
        for (const auto& c : r.cells) cell_w = std::max(cell_w, c.size());
    }
    cell_w += 2;
    std::ostringstream out;
    auto line = [&](char ch) { out << std::string(label_w + cell_w * columns, ch) << '\n'; };
    auto emit = [&](const std::string& label, const std::vector<std::string>& cells) {
        out << label << std::string(label_w - label.size(), ' ');
        for (std::size_t c = 0; c < columns; ++c) {
            const std::string& v = c < cells.size() ? cells[c] : std::string();
            out << std::string(cell_w - v.size(), ' ') << v;
        }
        out << '\n';
    };
    std::vector<std::string> heads;
    for (std::size_t c = 0; c < columns; ++c) heads.push_back("(" + std::to_string(c + 1) + ")");
    line('=');
    emit(title, {});
    emit("", heads);
    line('-');
    for (const auto& r : rows) {
        if (r.label == "--") {
            line('-');
            continue;
        }
        emit(r.label, r.cells);
    }
    line('=');
    return out.str();
}

// Estimate-with-stars row followed by a parenthesized SE row.
void coefficient_rows(std::vector<Row>& rows, const std::string& label, const std::string& name,
                      std::span<const ModelFit* const> fits) {
    Row est{label, {}};
    Row se{"", {}};
    bool any = false;
    for (const auto* f : fits) {
        const int j = f->index_of(name);
        if (j < 0) {
            est.cells.emplace_back();
            se.cells.emplace_back();
            continue;
        }
        any = true;
        est.cells.push_back(fixed(f->estimates(j), 4) + significance_stars(f->p_values(j)));
        se.cells.push_back("(" + fixed(f->std_errors(j), 4) + ")");
    }
    if (!any) return;
    rows.push_back(std::move(est));
    rows.push_back(std::move(se));
}

void csv_rows(std::ostringstream& csv, const std::string& panel, std::span<const ModelFit* const> fits) {
    for (std::size_t c = 0; c < fits.size(); ++c) {
        const auto& f = *fits[c];
        for (std::size_t j = 0; j < f.names.size(); ++j) {
            const auto i = static_cast<Eigen::Index>(j);
            char buf[256];
            std::snprintf(buf, sizeof buf, "%.10g,%.10g,%.10g,%.10g", f.estimates(i), f.std_errors(i),
                          f.statistics(i), f.p_values(i));
            csv << panel << ',' << (c + 1) << ',' << f.outcome << ',' << f.names[j] << ',' << buf << ','
                << significance_stars(f.p_values(i)) << ',' << f.n_obs << ',' << f.fit_statistic_name << ','
                << f.fit_statistic << ',' << (f.brand_fe ? 1 : 0) << ',' << (f.user_fe ? 1 : 0) << '\n';
        }
    }
}

}  // namespace

std::string significance_stars(double p) {
    if (!(p >= 0.0)) return "";
    if (p < 0.01) return "***";
    if (p < 0.05) return "**";
    if (p < 0.1) return "*";
    return "";
}

Report report_table(std::span<const ModelFit> fits, ReportStyle style) {
    if (fits.empty()) throw StatsError("nothing to report");
    const char* expected = style == ReportStyle::exp1 ? "logit" : "fe_ols";
    for (const auto& f : fits)
        if (f.model != expected) throw StatsError("mixed report styles: '" + f.model + "' fit in a " + expected + " table");

    Report report;
    std::ostringstream csv;
    csv << "panel,column,outcome,term,estimate,std_error,statistic,p_value,stars,n_obs,fit_statistic_name,"
           "fit_statistic,brand_fe,user_fe\n";
    const auto yes = [](bool b) { return std::string(b ? "Yes" : ""); };

    if (style == ReportStyle::exp1) {
        std::vector<const ModelFit*> cols;
        for (const auto& f : fits) cols.push_back(&f);
        std::vector<Row> rows;
        coefficient_rows(rows, "k1 - k2", "k1 - k2", cols);
        coefficient_rows(rows, "k1/(k1+k2)", "k1/(k1+k2)", cols);
        Row controls{"X1 - X2", {}};
        for (const auto* f : cols) controls.cells.push_back(yes(f->index_of("d_brightness") >= 0));
        rows.push_back(controls);
        rows.push_back({"--", {}});
        Row nobs{"Num.Obs.", {}}, r2{"pseudo-R2", {}};
        for (const auto* f : cols) {
            nobs.cells.push_back(std::to_string(f->n_obs));
            r2.cells.push_back(fixed(f->fit_statistic, 3));
        }
        rows.push_back(nobs);
        rows.push_back(r2);
        report.text = render("logit(Pr(Y=1))", rows, cols.size());
        report.text += "Intercept omitted. Standard errors in parentheses. * p<0.1, ** p<0.05, *** p<0.01.\n";
        int dropped = 0;
        for (const auto* f : cols) dropped = std::max(dropped, f->rows_dropped);
        if (dropped > 0) report.text += "Rows dropped for missing covariates: " + std::to_string(dropped) + "\n";
        csv_rows(csv, "", cols);
    } else {
        const std::pair<const char*, const char*> panels[] = {{"purchase", "Panel A: Purchase"},
                                                              {"decision_time", "Panel B: Decision Time (seconds)"}};
        for (const auto& [outcome, title] : panels) {
            std::vector<const ModelFit*> cols;
            for (const auto& f : fits)
                if (f.outcome == outcome) cols.push_back(&f);
            if (cols.empty()) continue;
            std::vector<Row> rows;
            coefficient_rows(rows, "k", kKScaled, cols);
            coefficient_rows(rows, "price", kPriceScaled, cols);
            coefficient_rows(rows, "NImage", kNImages, cols);
            Row brand{"Brand FE", {}}, user{"User FE", {}};
            for (const auto* f : cols) {
                brand.cells.push_back(yes(f->brand_fe));
                user.cells.push_back(yes(f->user_fe));
            }
            rows.push_back(brand);
            rows.push_back(user);
            rows.push_back({"--", {}});
            Row nobs{"Num. Obs.", {}}, r2{"R2", {}};
            for (const auto* f : cols) {
                nobs.cells.push_back(std::to_string(f->n_obs));
                r2.cells.push_back(fixed(f->fit_statistic, 3));
            }
            rows.push_back(nobs);
            rows.push_back(r2);
            if (!report.text.empty()) report.text += '\n';
            report.text += render(title, rows, cols.size());
            csv_rows(csv, outcome == std::string("purchase") ? "A" : "B", cols);
        }
        report.text += "Standard errors in parentheses. * p<0.1, ** p<0.05, *** p<0.01.\n"
                       "k and price are divided by 1,000.\n";
    }
    report.csv = csv.str();
    return report;
}

}  // namespace imgk::stats
