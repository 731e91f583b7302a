#pragma once

#include <cstddef>
#include <map>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

#include "consensus_vem/model.hpp"

namespace cvem::dist {

enum class PartitionMode { Row, Column, Arbitrary };

/// One base column of the ensemble: classifier l or clustering m (0-indexed).
struct ColumnRef {
    enum class Kind { Classifier, Clusterer };
    Kind kind = Kind::Classifier;
    std::size_t index = 0;

    bool operator==(const ColumnRef&) const = default;
    auto operator<=>(const ColumnRef&) const = default;
    /// "clf_<l+1>" or "clu_<m+1>", matching the labels CSV header.
    std::string name() const;
    static ColumnRef parse(const std::string& name);
};

using BlockKey = std::pair<std::size_t, std::size_t>;  // (row group, column group)

/// How objects and ensemble columns are spread over data sites.
///
/// Row mode: row_groups are the sites; column_groups may be left empty (one
/// group holding every column). Column mode: column_groups are the sites;
/// row_groups may be left empty (one group holding every object). Arbitrary
/// mode: site_of maps every (row group, column group) block to a client id.
struct PartitionSpec {
    PartitionMode mode = PartitionMode::Row;
    std::vector<std::vector<std::size_t>> row_groups;
    std::vector<std::vector<ColumnRef>> column_groups;
    std::map<BlockKey, std::string> site_of;

    /// Fills in omitted groups and default client names for row/column mode.
    PartitionSpec normalized(const ProblemShape& shape) const;
    /// Throws InvalidArgument unless groups are disjoint and covering.
    void validate(const ProblemShape& shape) const;
};

/// Raised when a node touches state outside its scope. Indicates a bug in the
/// simulation, not a recoverable condition.
class SimulationIntegrityError : public std::logic_error {
public:
    using std::logic_error::logic_error;
};

/// Raised by plan() for layouts the protocol cannot run privately.
class PlanRejected : public std::invalid_argument {
public:
    using std::invalid_argument::invalid_argument;
};

std::string to_string(PartitionMode mode);
PartitionMode parse_partition_mode(const std::string& text);

/// Contiguous row split into `parts` groups.
PartitionSpec row_partition(std::size_t n_objects, std::size_t parts);

/// The six-site layout of the arbitrarily distributed example: four row
/// groups, three column groups (G1 = clf_1, clf_2, clu_1; G2 = clu_2;
/// G3 = clf_3, clf_4, clu_3) and clients C1..C6. Needs r1 = 4, r2 = 3.
PartitionSpec six_site_layout(std::size_t n_objects);

}  // namespace cvem::dist
