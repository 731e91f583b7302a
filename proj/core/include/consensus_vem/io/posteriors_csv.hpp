#pragma once

#include <cstdint>
#include <iosfwd>
#include <string>
#include <vector>

#include "consensus_vem/model.hpp"

namespace cvem::io {

/// object_id,p_class_1..p_class_k,hard_label with probabilities at 17
/// significant digits, rows sorted by object id.
void write_posteriors_csv(std::ostream& out, const PosteriorResult& result,
                          const std::vector<std::int64_t>& object_ids);
void write_posteriors_csv(const std::string& path, const PosteriorResult& result,
                          const std::vector<std::int64_t>& object_ids);

struct PosteriorsFile {
    std::vector<std::int64_t> object_ids;
    Matrix class_posteriors;
    std::vector<int> hard_labels;  // 0-indexed
};

PosteriorsFile parse_posteriors_csv(std::istream& in);
PosteriorsFile read_posteriors_csv(const std::string& path);

/// object_id,true_label,y_1..y_k,theta_1..theta_k,z_1..z_r2 where true_label
/// is the argmax of y_n (1-indexed like z).
void write_truth_csv(std::ostream& out, const LatentTruth& truth,
                     const std::vector<std::int64_t>& object_ids);
void write_truth_csv(const std::string& path, const LatentTruth& truth,
                     const std::vector<std::int64_t>& object_ids);

struct TruthFile {
    std::vector<std::int64_t> object_ids;
    std::vector<int> labels;  // 0-indexed
};

/// Reads object_id and true_label; further columns are ignored.
TruthFile parse_truth_csv(std::istream& in);
TruthFile read_truth_csv(const std::string& path);

/// iteration,elbo with 17 significant digits.
void write_trace_csv(const std::string& path, const std::vector<double>& trace);

}  // namespace cvem::io
