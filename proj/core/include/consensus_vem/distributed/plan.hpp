#pragma once

#include <array>
#include <cstddef>
#include <map>
#include <string>
#include <vector>

#include "consensus_vem/distributed/partition.hpp"

namespace cvem::dist {

enum class NodeKind { Server, Client, AuxServer, AuxClient };

/// The eleven updates of one EM iteration.
enum class UpdateKind { Kappa, Xi, Phi, MuN, SigmaN2, EpsN, DeltaN2, Mu, Delta2, Beta, Sigma2 };

inline constexpr std::size_t kUpdateKinds = 11;

std::string to_string(NodeKind kind);
std::string to_string(UpdateKind kind);

struct NodeRole {
    std::string id;
    NodeKind kind = NodeKind::Client;
    std::vector<std::size_t> row_groups;
    std::vector<std::size_t> column_groups;
};

inline const std::string kServerId = "server";
inline const std::string kStoreId = "store";

struct ExecutionPlan {
    PartitionSpec spec;  // normalized
    std::vector<NodeRole> nodes;
    /// Node running the object-level updates of each row group.
    std::vector<std::string> object_owner;
    /// Node running the beta update of each column group.
    std::vector<std::string> beta_owner;
    /// Client holding the labels of each (row group, column group) block.
    std::map<BlockKey, std::string> block_owner;
    /// Column and arbitrary modes keep per-object state in a shared store.
    bool uses_store = false;
    std::array<NodeKind, kUpdateKinds> assignment{};

    NodeKind executor(UpdateKind kind) const { return assignment[static_cast<std::size_t>(kind)]; }
    std::size_t count(NodeKind kind) const;
    const NodeRole& node(const std::string& id) const;
    std::vector<std::string> clients() const;
};

/// Assigns every update to a node class and names the nodes. Throws
/// PlanRejected when a client would have to reveal classifier votes from a
/// single column, and InvalidArgument for malformed specs.
ExecutionPlan plan(const PartitionSpec& spec, const ProblemShape& shape);

}  // namespace cvem::dist
