#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "consensus_vem/distributed/partition.hpp"
#include "consensus_vem/inference.hpp"
#include "consensus_vem/model.hpp"

namespace cvem::io {

/// {"mu": [...], "sigma2": [...], "delta2": x, "beta": [[[...]]]}
ModelParams parse_model_json(const std::string& text);
ModelParams read_model_json(const std::string& path);
std::string model_to_json(const ModelParams& params);

/// {"mode": "row"|"column"|"arbitrary", "row_groups": [[object ids]],
///  "column_groups": [["clf_1", "clu_2", ...]], "site_of": {"<r>,<c>": "C1"}}
/// Object ids are those of the labels file; groups in site_of keys are
/// 1-indexed.
dist::PartitionSpec parse_partition_json(const std::string& text,
                                         const std::vector<std::int64_t>& object_ids);
dist::PartitionSpec read_partition_json(const std::string& path,
                                        const std::vector<std::int64_t>& object_ids);
std::string partition_to_json(const dist::PartitionSpec& spec,
                              const std::vector<std::int64_t>& object_ids);

enum class RunMode { Central, Row, Column, Arbitrary };

std::string to_string(RunMode mode);
RunMode parse_run_mode(const std::string& text);

struct RunConfig {
    FitConfig fit{};
    RunMode mode = RunMode::Central;
    std::string partition_path;
    std::string input_path;
    std::string output_path;

    /// Throws InvalidArgument when a distributed mode has no partition file.
    void validate() const;
};

/// Any subset of: outer_max_iter, outer_rel_tol, estep_max_sweeps,
/// estep_rel_tol, seed, phi_floor, beta_floor, phi_update ("elbo"|"printed"),
/// objective_form ("elbo"|"printed"), ascent_rel_tol, ascent_max_iter,
/// threads, mode, partition, input, output. Unknown keys are rejected.
RunConfig parse_run_config_json(const std::string& text);
RunConfig read_run_config(const std::string& path);

std::string read_text_file(const std::string& path);

}  // namespace cvem::io
