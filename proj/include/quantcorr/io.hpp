#pragma once

#include <iosfwd>
#include <string>
#include <vector>

#include "quantcorr/dataset.hpp"

namespace quantcorr {

struct IngestResult {
    Dataset data;
    std::size_t rows_read = 0;
    std::vector<std::size_t> dropped_rows;  // 1-based data line numbers
};

// Reads a comma-separated file with a header row. Only `columns` are kept
// and parsed as decimal reals; rows with a missing cell ("", "NA", "NaN")
// in any of them are dropped and reported. Columns in `binary_columns` must
// hold 0 or 1.
IngestResult ingest(const std::string& path, const std::vector<std::string>& columns,
                    const std::vector<std::string>& binary_columns = {});

// Round-trippable decimal representation ("%.17g").
std::string format_full(double v);
// Three decimals, for human-readable tables.
std::string format_short(double v);

void write_csv(std::ostream& out, const Dataset& data);

}  // namespace quantcorr
