#pragma once

#include <cstddef>
#include <span>
#include <string>
#include <vector>

namespace quantcorr {

// Column-oriented numeric table. Binary indicators are stored as 0/1 reals.
// row_ids carries the identifier of each row in its source (1-based data
// line number for CSV input, the original row for bootstrap resamples).
class Dataset {
public:
    Dataset() = default;

    void add_column(std::string name, std::vector<double> values);

    std::size_t rows() const { return row_ids_.size(); }
    std::size_t cols() const { return names_.size(); }

    bool has_column(const std::string& name) const;
    std::size_t column_index(const std::string& name) const;
    std::span<const double> column(const std::string& name) const;
    std::span<const double> column(std::size_t index) const { return columns_.at(index); }
    const std::vector<std::string>& names() const { return names_; }

    const std::vector<std::size_t>& row_ids() const { return row_ids_; }
    void set_row_ids(std::vector<std::size_t> ids);

    // New dataset holding rows[i] of this one, in order; duplicates allowed.
    Dataset take_rows(std::span<const std::size_t> rows) const;

    std::string source;

private:
    std::vector<std::string> names_;
    std::vector<std::vector<double>> columns_;
    std::vector<std::size_t> row_ids_;
};

}  // namespace quantcorr
