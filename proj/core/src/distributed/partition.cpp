#include "consensus_vem/distributed/partition.hpp"

#include <algorithm>
#include <numeric>
#include <set>

#include "consensus_vem/errors.hpp"

namespace cvem::dist {

namespace {

void require(bool ok, const std::string& what) {
    if (!ok) throw InvalidArgument("partition: " + what);
}

std::vector<ColumnRef> all_columns(const ProblemShape& shape) {
    std::vector<ColumnRef> cols;
    for (std::size_t l = 0; l < shape.n_classifiers; ++l) {
        cols.push_back({ColumnRef::Kind::Classifier, l});
    }
    for (std::size_t m = 0; m < shape.n_clusterings; ++m) {
        cols.push_back({ColumnRef::Kind::Clusterer, m});
    }
    return cols;
}

std::vector<std::size_t> iota_ids(std::size_t n) {
    std::vector<std::size_t> ids(n);
    std::iota(ids.begin(), ids.end(), std::size_t{0});
    return ids;
}

}  // namespace

std::string ColumnRef::name() const {
    return (kind == Kind::Classifier ? "clf_" : "clu_") + std::to_string(index + 1);
}

ColumnRef ColumnRef::parse(const std::string& name) {
    const bool clf = name.rfind("clf_", 0) == 0;
    const bool clu = name.rfind("clu_", 0) == 0;
    if ((!clf && !clu) || name.size() < 5) throw InvalidArgument("bad column name: " + name);
    std::size_t pos = 0;
    unsigned long value = 0;
    try {
        value = std::stoul(name.substr(4), &pos);
    } catch (const std::exception&) {
        throw InvalidArgument("bad column name: " + name);
    }
    if (pos != name.size() - 4 || value == 0) throw InvalidArgument("bad column name: " + name);
    return {clf ? Kind::Classifier : Kind::Clusterer, value - 1};
}

std::string to_string(PartitionMode mode) {
    switch (mode) {
        case PartitionMode::Row: return "row";
        case PartitionMode::Column: return "column";
        case PartitionMode::Arbitrary: return "arbitrary";
    }
    return "?";
}

PartitionMode parse_partition_mode(const std::string& text) {
    if (text == "row") return PartitionMode::Row;
    if (text == "column") return PartitionMode::Column;
    if (text == "arbitrary") return PartitionMode::Arbitrary;
    throw InvalidArgument("unknown partition mode: " + text);
}

PartitionSpec PartitionSpec::normalized(const ProblemShape& shape) const {
    PartitionSpec out = *this;
    if (out.row_groups.empty()) out.row_groups.push_back(iota_ids(shape.n_objects));
    if (out.column_groups.empty()) out.column_groups.push_back(all_columns(shape));
    if (out.site_of.empty() && mode != PartitionMode::Arbitrary) {
        if (mode == PartitionMode::Row) {
            for (std::size_t d = 0; d < out.row_groups.size(); ++d) {
                out.site_of[{d, 0}] = "C" + std::to_string(d + 1);
            }
        } else {
            for (std::size_t g = 0; g < out.column_groups.size(); ++g) {
                out.site_of[{0, g}] = "C" + std::to_string(g + 1);
            }
        }
    }
    return out;
}

void PartitionSpec::validate(const ProblemShape& shape) const {
    const PartitionSpec spec = normalized(shape);
    std::vector<char> seen(shape.n_objects, 0);
    for (const auto& group : spec.row_groups) {
        require(!group.empty(), "empty row group");
        for (std::size_t n : group) {
            require(n < shape.n_objects, "object index out of range");
            require(!seen[n], "object " + std::to_string(n) + " in two row groups");
            seen[n] = 1;
        }
    }
    require(std::all_of(seen.begin(), seen.end(), [](char c) { return c != 0; }),
            "row groups do not cover every object");

    std::set<ColumnRef> cols;
    for (const auto& group : spec.column_groups) {
        require(!group.empty(), "empty column group");
        for (const ColumnRef& c : group) {
            const std::size_t limit = c.kind == ColumnRef::Kind::Classifier ? shape.n_classifiers
                                                                            : shape.n_clusterings;
            require(c.index < limit, "column " + c.name() + " out of range");
            require(cols.insert(c).second, "column " + c.name() + " in two column groups");
        }
    }
    require(cols.size() == shape.n_classifiers + shape.n_clusterings,
            "column groups do not cover every column");

    switch (mode) {
        case PartitionMode::Row:
            require(spec.column_groups.size() == 1, "row mode takes a single column group");
            break;
        case PartitionMode::Column:
            require(spec.row_groups.size() == 1, "column mode takes a single row group");
            break;
        case PartitionMode::Arbitrary: break;
    }
    for (std::size_t d = 0; d < spec.row_groups.size(); ++d) {
        for (std::size_t g = 0; g < spec.column_groups.size(); ++g) {
            auto it = spec.site_of.find({d, g});
            require(it != spec.site_of.end() && !it->second.empty(),
                    "block (" + std::to_string(d + 1) + "," + std::to_string(g + 1) +
                        ") has no site");
        }
    }
    for (const auto& [key, site] : spec.site_of) {
        require(key.first < spec.row_groups.size() && key.second < spec.column_groups.size(),
                "site_of names a block outside the grid");
        require(site != "server" && site != "store" && site.rfind("AS", 0) != 0 &&
                    site.rfind("AC", 0) != 0,
                "site id " + site + " is reserved");
    }
}

PartitionSpec row_partition(std::size_t n_objects, std::size_t parts) {
    if (parts == 0 || parts > n_objects) throw InvalidArgument("row_partition: bad part count");
    PartitionSpec spec;
    spec.mode = PartitionMode::Row;
    for (std::size_t d = 0; d < parts; ++d) {
        const std::size_t lo = d * n_objects / parts;
        const std::size_t hi = (d + 1) * n_objects / parts;
        std::vector<std::size_t> group(hi - lo);
        std::iota(group.begin(), group.end(), lo);
        spec.row_groups.push_back(std::move(group));
    }
    return spec;
}

PartitionSpec six_site_layout(std::size_t n_objects) {
    PartitionSpec spec = row_partition(n_objects, 4);
    spec.mode = PartitionMode::Arbitrary;
    using K = ColumnRef::Kind;
    spec.column_groups = {
        {{K::Classifier, 0}, {K::Classifier, 1}, {K::Clusterer, 0}},
        {{K::Clusterer, 1}},
        {{K::Classifier, 2}, {K::Classifier, 3}, {K::Clusterer, 2}},
    };
    spec.site_of = {
        {{0, 0}, "C1"}, {{0, 1}, "C2"}, {{0, 2}, "C2"},
        {{1, 0}, "C3"}, {{1, 1}, "C2"}, {{1, 2}, "C2"},
        {{2, 0}, "C3"}, {{2, 1}, "C4"}, {{2, 2}, "C4"},
        {{3, 0}, "C5"}, {{3, 1}, "C5"}, {{3, 2}, "C6"},
    };
    return spec;
}

}  // namespace cvem::dist
