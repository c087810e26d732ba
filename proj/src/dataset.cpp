#include "quantcorr/dataset.hpp"

#include <algorithm>
#include <numeric>

#include "quantcorr/error.hpp"

namespace quantcorr {

void Dataset::add_column(std::string name, std::vector<double> values) {
    if (has_column(name)) {
        throw InvalidArgument("duplicate column '" + name + "'");
    }
    if (!columns_.empty() && values.size() != columns_.front().size()) {
        throw InvalidArgument("column '" + name + "' has " + std::to_string(values.size()) +
                              " rows, expected " + std::to_string(columns_.front().size()));
    }
    if (columns_.empty() && row_ids_.empty()) {
        row_ids_.resize(values.size());
        std::iota(row_ids_.begin(), row_ids_.end(), std::size_t{1});
    }
    names_.push_back(std::move(name));
    columns_.push_back(std::move(values));
}

bool Dataset::has_column(const std::string& name) const {
    return std::find(names_.begin(), names_.end(), name) != names_.end();
}

std::size_t Dataset::column_index(const std::string& name) const {
    auto it = std::find(names_.begin(), names_.end(), name);
    if (it == names_.end()) {
        throw InvalidArgument("missing column '" + name + "'");
    }
    return static_cast<std::size_t>(it - names_.begin());
}

std::span<const double> Dataset::column(const std::string& name) const {
    return columns_[column_index(name)];
}

void Dataset::set_row_ids(std::vector<std::size_t> ids) {
    if (!columns_.empty() && ids.size() != columns_.front().size()) {
        throw InvalidArgument("row id count does not match row count");
    }
    row_ids_ = std::move(ids);
}

Dataset Dataset::take_rows(std::span<const std::size_t> rows) const {
    Dataset out;
    out.source = source;
    std::vector<std::size_t> ids;
    ids.reserve(rows.size());
    for (std::size_t r : rows) {
        ids.push_back(row_ids_.at(r));
    }
    out.row_ids_ = std::move(ids);
    for (std::size_t c = 0; c < names_.size(); ++c) {
        std::vector<double> values;
        values.reserve(rows.size());
        for (std::size_t r : rows) {
            values.push_back(columns_[c][r]);
        }
        out.names_.push_back(names_[c]);
        out.columns_.push_back(std::move(values));
    }
    return out;
}

}  // namespace quantcorr
