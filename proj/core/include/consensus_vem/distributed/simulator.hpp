#pragma once

#include <cstddef>
#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "consensus_vem/distributed/message.hpp"
#include "consensus_vem/distributed/plan.hpp"
#include "consensus_vem/inference.hpp"

namespace cvem::dist {

struct DistributedResult {
    /// Parameters, state and posteriors gathered from the nodes after the run.
    FitResult fit;
    MessageLog log;
    ExecutionPlan plan;
};

/// Runs the fit loop on logical nodes laid out by `spec`. Every dependency
/// between nodes is a logged Message; with the same cfg the result matches
/// fit() bit for bit.
DistributedResult run_distributed(const LabelObservations& w, const ProblemShape& shape,
                                  const FitConfig& cfg, const PartitionSpec& spec);

/// Versioned per-object variational rows shared between the node that
/// updates an object and the clients holding its labels. Access outside a
/// node's scope throws SimulationIntegrityError.
class VariationalStore {
public:
    enum class Field { MuN, EpsN };

    VariationalStore(const ExecutionPlan& plan, std::size_t n_objects, std::size_t n_classes);

    /// Copies rows local_rows[i] of `local` to objects[i].
    void write(const std::string& writer, std::span<const std::size_t> objects,
               const VariationalState& local, std::span<const std::size_t> local_rows);
    /// objects.size() x k matrix of the requested field.
    Matrix read(const std::string& reader, std::span<const std::size_t> objects, Field field) const;

    std::uint64_t version() const noexcept { return version_; }
    std::size_t row_group_of(std::size_t object) const { return group_of_.at(object); }

private:
    const ExecutionPlan* plan_;
    std::vector<std::size_t> group_of_;
    VariationalState rows_;
    std::uint64_t version_ = 0;
};

}  // namespace cvem::dist
