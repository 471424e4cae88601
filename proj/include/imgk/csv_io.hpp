#pragma once

#include <filesystem>
#include <stdexcept>
#include <string>
#include <vector>

#include "imgk/stats.hpp"

namespace imgk {

/// Bad or missing column in an input table; column() names it.
class SchemaError : public std::runtime_error {
public:
    SchemaError(std::string column, const std::string& what)
        : std::runtime_error(what), column_(std::move(column)) {}
    const std::string& column() const noexcept { return column_; }

private:
    std::string column_;
};

/// participant_id,product_id,y,k1,k2,x1_<cov>...,x2_<cov>...
std::vector<std::string> exp1_columns();
/// participant_id,product_id,brand_id,set_id,purchase,decision_time_s,k,price,n_images
std::vector<std::string> exp2_columns();

/// Empty or "NA" covariate cells load as NaN; other columns must be present.
std::vector<stats::ChoiceRow> read_exp1_csv(const std::filesystem::path& path);
void write_exp1_csv(const std::vector<stats::ChoiceRow>& rows, const std::filesystem::path& path);

std::vector<stats::PanelRow> read_exp2_csv(const std::filesystem::path& path);
void write_exp2_csv(const std::vector<stats::PanelRow>& rows, const std::filesystem::path& path);

}  // namespace imgk
