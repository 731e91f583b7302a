#include "consensus_vem/distributed/plan.hpp"

#include <algorithm>
#include <set>

#include "consensus_vem/errors.hpp"

namespace cvem::dist {

std::string to_string(NodeKind kind) {
    switch (kind) {
        case NodeKind::Server: return "Server";
        case NodeKind::Client: return "Client";
        case NodeKind::AuxServer: return "AuxServer";
        case NodeKind::AuxClient: return "AuxClient";
    }
    return "?";
}

std::string to_string(UpdateKind kind) {
    static const std::array<const char*, kUpdateKinds> names = {
        "kappa", "xi", "phi", "mu_n", "sigma_n2", "eps_n", "delta_n2", "mu", "delta2", "beta", "sigma2"};
    return names[static_cast<std::size_t>(kind)];
}

std::size_t ExecutionPlan::count(NodeKind kind) const {
    return static_cast<std::size_t>(
        std::count_if(nodes.begin(), nodes.end(), [&](const NodeRole& r) { return r.kind == kind; }));
}

const NodeRole& ExecutionPlan::node(const std::string& id) const {
    for (const NodeRole& r : nodes) {
        if (r.id == id) return r;
    }
    throw InvalidArgument("plan: unknown node " + id);
}

std::vector<std::string> ExecutionPlan::clients() const {
    std::vector<std::string> ids;
    for (const NodeRole& r : nodes) {
        if (r.kind == NodeKind::Client) ids.push_back(r.id);
    }
    return ids;
}

ExecutionPlan plan(const PartitionSpec& raw, const ProblemShape& shape) {
    shape.validate();
    raw.validate(shape);
    ExecutionPlan p;
    p.spec = raw.normalized(shape);
    const PartitionSpec& spec = p.spec;
    const std::size_t n_rows = spec.row_groups.size();
    const std::size_t n_cols = spec.column_groups.size();
    p.block_owner = spec.site_of;
    p.uses_store = spec.mode != PartitionMode::Row;

    // Classifier columns a client holds per row group; these are what its
    // vote-count messages aggregate over.
    std::map<std::pair<std::string, std::size_t>, std::size_t> clf_held;
    for (const auto& [key, site] : spec.site_of) {
        std::size_t clf = 0;
        for (const ColumnRef& c : spec.column_groups[key.second]) {
            if (c.kind == ColumnRef::Kind::Classifier) ++clf;
        }
        clf_held[{site, key.first}] += clf;
    }
    for (const auto& [key, clf] : clf_held) {
        const bool ok = spec.mode == PartitionMode::Row ||
                        (spec.mode == PartitionMode::Column && clf != 1) ||
                        (spec.mode == PartitionMode::Arbitrary && clf >= 2);
        if (!ok) {
            throw PlanRejected("plan: client " + key.first + " holds " + std::to_string(clf) +
                               " classifier column(s) of row group " +
                               std::to_string(key.second + 1) + "; at least two are required");
        }
    }

    using U = UpdateKind;
    const auto assign = [&](std::initializer_list<U> kinds, NodeKind who) {
        for (U u : kinds) p.assignment[static_cast<std::size_t>(u)] = who;
    };
    const std::initializer_list<U> object_level = {U::Kappa, U::Xi, U::MuN, U::SigmaN2, U::EpsN, U::DeltaN2};
    const std::initializer_list<U> global = {U::Mu, U::Delta2, U::Sigma2};

    p.nodes.push_back({kServerId, NodeKind::Server, {}, {}});
    std::map<std::string, NodeRole> clients;
    for (const auto& [key, site] : spec.site_of) {
        NodeRole& r = clients[site];
        r.id = site;
        r.kind = NodeKind::Client;
        if (std::find(r.row_groups.begin(), r.row_groups.end(), key.first) == r.row_groups.end()) {
            r.row_groups.push_back(key.first);
        }
        if (std::find(r.column_groups.begin(), r.column_groups.end(), key.second) ==
            r.column_groups.end()) {
            r.column_groups.push_back(key.second);
        }
    }
    for (auto& [id, role] : clients) {
        std::sort(role.row_groups.begin(), role.row_groups.end());
        std::sort(role.column_groups.begin(), role.column_groups.end());
        p.nodes.push_back(role);
    }

    switch (spec.mode) {
        case PartitionMode::Row:
            assign(object_level, NodeKind::Client);
            assign({U::Phi}, NodeKind::Client);
            assign(global, NodeKind::Server);
            assign({U::Beta}, NodeKind::Server);
            for (std::size_t d = 0; d < n_rows; ++d) p.object_owner.push_back(spec.site_of.at({d, 0}));
            p.beta_owner.assign(n_cols, kServerId);
            break;
        case PartitionMode::Column:
            assign(object_level, NodeKind::Server);
            assign({U::Phi, U::Beta}, NodeKind::Client);
            assign(global, NodeKind::Server);
            p.object_owner.assign(n_rows, kServerId);
            for (std::size_t g = 0; g < n_cols; ++g) p.beta_owner.push_back(spec.site_of.at({0, g}));
            break;
        case PartitionMode::Arbitrary:
            assign(object_level, NodeKind::AuxServer);
            assign({U::Phi}, NodeKind::Client);
            assign({U::Beta}, NodeKind::AuxClient);
            assign(global, NodeKind::Server);
            for (std::size_t d = 0; d < n_rows; ++d) {
                const std::string id = "AS" + std::to_string(d + 1);
                p.nodes.push_back({id, NodeKind::AuxServer, {d}, {}});
                p.object_owner.push_back(id);
            }
            for (std::size_t g = 0; g < n_cols; ++g) {
                const std::string id = "AC" + std::to_string(g + 1);
                p.nodes.push_back({id, NodeKind::AuxClient, {}, {g}});
                p.beta_owner.push_back(id);
            }
            break;
    }
    return p;
}

}  // namespace cvem::dist
