#pragma once

#include <cstdint>
#include <iosfwd>
#include <string>
#include <vector>

#include "consensus_vem/model.hpp"

namespace cvem::io {

/// Contents of a labels CSV:
///   # k=<int>              optional, overrides the inferred class count
///   # km=<int,int,...>     optional, overrides inferred cluster counts
///   object_id,clf_1..clf_r1,clu_1..clu_r2
///   integer rows, labels 1-indexed
/// Labels are converted to 0-indexed on read and back on write.
struct LabelsFile {
    LabelObservations w;
    ProblemShape shape;
    std::vector<std::int64_t> object_ids;  // in file order
};

LabelsFile parse_labels_csv(std::istream& in);
LabelsFile read_labels_csv(const std::string& path);

/// Writes `# k=` and `# km=` headers so the shape survives a round trip.
void write_labels_csv(std::ostream& out, const LabelsFile& file);
void write_labels_csv(const std::string& path, const LabelsFile& file);

/// Ids 1..n.
std::vector<std::int64_t> default_object_ids(std::size_t n);

}  // namespace cvem::io
