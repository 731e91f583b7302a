#include "consensus_vem/distributed/simulator.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <mutex>
#include <set>
#include <unordered_map>

#include "consensus_vem/elbo.hpp"
#include "consensus_vem/parallel.hpp"
#include "consensus_vem/posterior.hpp"

namespace cvem::dist {

// ---------------------------------------------------------------------------
// Store

VariationalStore::VariationalStore(const ExecutionPlan& plan, std::size_t n_objects,
                                   std::size_t n_classes)
    : plan_(&plan), group_of_(n_objects, 0), rows_(n_objects, n_classes, 0) {
    for (std::size_t d = 0; d < plan.spec.row_groups.size(); ++d) {
        for (std::size_t n : plan.spec.row_groups[d]) group_of_[n] = d;
    }
}

void VariationalStore::write(const std::string& writer, std::span<const std::size_t> objects,
                             const VariationalState& local,
                             std::span<const std::size_t> local_rows) {
    for (std::size_t i = 0; i < objects.size(); ++i) {
        const std::size_t n = objects[i];
        if (n >= group_of_.size() || plan_->object_owner[group_of_[n]] != writer) {
            throw SimulationIntegrityError("store: " + writer + " may not write object " +
                                           std::to_string(n));
        }
        const std::size_t r = local_rows[i];
        std::ranges::copy(local.mu_n.row(r), rows_.mu_n.row(n).begin());
        std::ranges::copy(local.sigma_n2.row(r), rows_.sigma_n2.row(n).begin());
        std::ranges::copy(local.eps_n.row(r), rows_.eps_n.row(n).begin());
        std::ranges::copy(local.delta_n2.row(r), rows_.delta_n2.row(n).begin());
        rows_.kappa[n] = local.kappa[r];
        rows_.xi[n] = local.xi[r];
    }
    ++version_;
}

Matrix VariationalStore::read(const std::string& reader, std::span<const std::size_t> objects,
                              Field field) const {
    Matrix out(objects.size(), rows_.n_classes());
    for (std::size_t i = 0; i < objects.size(); ++i) {
        const std::size_t n = objects[i];
        if (n >= group_of_.size()) {
            throw SimulationIntegrityError("store: object " + std::to_string(n) + " does not exist");
        }
        const std::size_t d = group_of_[n];
        bool allowed = plan_->object_owner[d] == reader;
        for (std::size_t g = 0; !allowed && g < plan_->spec.column_groups.size(); ++g) {
            allowed = plan_->block_owner.at({d, g}) == reader;
        }
        if (!allowed) {
            throw SimulationIntegrityError("store: " + reader + " may not read object " +
                                           std::to_string(n));
        }
        const Matrix& src = field == Field::MuN ? rows_.mu_n : rows_.eps_n;
        std::ranges::copy(src.row(n), out.row(i).begin());
    }
    return out;
}

namespace {

using Kind = ColumnRef::Kind;

// ---------------------------------------------------------------------------
// Transport

class Network {
public:
    void at(std::size_t outer, Phase phase, std::size_t round) {
        outer_ = outer;
        phase_ = phase;
        round_ = round;
    }

    /// Delivers a message. Transfers between roles hosted on the same node are
    /// delivered but not logged.
    void send(const std::string& from, const std::string& to, MessageKind kind, Payload payload) {
        Message m{outer_, phase_, round_, from, to, kind, std::move(payload)};
        std::lock_guard lock(mutex_);
        if (from != to) log_.append(m);
        inbox_[to].push_back(std::move(m));
    }

    std::vector<Message> take(const std::string& to, MessageKind kind) {
        return take_if(to, kind, [](const Message&) { return true; });
    }

    template <typename Pred>
    std::vector<Message> take_if(const std::string& to, MessageKind kind, Pred pred) {
        std::lock_guard lock(mutex_);
        std::vector<Message>& box = inbox_[to];
        std::vector<Message> out;
        std::vector<Message> rest;
        for (Message& m : box) (m.kind == kind && pred(m) ? out : rest).push_back(std::move(m));
        box = std::move(rest);
        return out;
    }

    MessageLog release() {
        log_.finalize();
        return std::move(log_);
    }

private:
    std::size_t outer_ = 0;
    Phase phase_ = Phase::Setup;
    std::size_t round_ = 0;
    std::mutex mutex_;
    std::map<std::string, std::vector<Message>> inbox_;
    MessageLog log_;
};

Payload exact_payload(std::string quantity, std::vector<std::size_t> shape,
                      std::vector<ExactSum> sums, std::vector<std::size_t> objects = {},
                      std::vector<ColumnRef> columns = {}) {
    Payload p;
    p.quantity = std::move(quantity);
    p.shape = std::move(shape);
    p.values.reserve(sums.size());
    for (const ExactSum& s : sums) p.values.push_back(s.value());
    p.exact = std::move(sums);
    p.objects = std::move(objects);
    p.columns = std::move(columns);
    return p;
}

Payload plain_payload(std::string quantity, std::vector<std::size_t> shape,
                      std::vector<double> values, std::vector<std::size_t> objects = {},
                      std::vector<ColumnRef> columns = {}) {
    Payload p;
    p.quantity = std::move(quantity);
    p.shape = std::move(shape);
    p.values = std::move(values);
    p.objects = std::move(objects);
    p.columns = std::move(columns);
    return p;
}

// ---------------------------------------------------------------------------
// Nodes

struct ClientSlice {
    std::size_t row_group = 0;
    std::vector<std::size_t> objects;
    std::vector<ColumnRef> classifier_cols;
    LabelMatrix class_labels;
    std::vector<ColumnRef> clusterer_cols;
    std::vector<std::size_t> clusterer_group;
    LabelMatrix cluster_labels;
    std::vector<Matrix> phi;
    std::unordered_map<std::size_t, std::size_t> local;
};

struct Client {
    std::string id;
    std::vector<ClientSlice> slices;
    std::map<std::size_t, Matrix> beta;  // by clustering
};

struct Owner {
    std::string id;
    std::size_t row_group = 0;
    std::vector<std::size_t> objects;
    std::unordered_map<std::size_t, std::size_t> local;
    VariationalState vs;
    Matrix votes;
    ModelParams params;
    std::vector<ClusterAggregate> agg;
    std::vector<char> active;
    std::vector<double> previous;
    std::vector<BlockSteps> steps;

    std::vector<std::size_t> active_objects() const {
        std::vector<std::size_t> ids;
        for (std::size_t i = 0; i < objects.size(); ++i) {
            if (active[i]) ids.push_back(objects[i]);
        }
        return ids;
    }
};

struct BetaOwner {
    std::string id;
    std::size_t column_group = 0;
    std::map<std::size_t, std::vector<ExactSum>> counts;
    std::map<std::size_t, Matrix> beta;
};

class Simulation {
public:
    Simulation(const LabelObservations& w, const ProblemShape& shape, const FitConfig& cfg,
               const PartitionSpec& spec)
        : shape_(shape),
          cfg_(cfg),
          plan_(plan(spec, shape)),
          store_(plan_, shape.n_objects, shape.n_classes),
          k_(shape.n_classes),
          r1_(shape.n_classifiers),
          r2_(shape.n_clusterings),
          workers_(worker_count(cfg.threads)) {
        load(w);
    }

    DistributedResult run();

private:
    void load(const LabelObservations& w);
    void setup();
    double bound(std::size_t outer);
    void e_step(std::size_t outer);
    void m_step(std::size_t outer);
    DistributedResult collect();

    Owner& owner_of(std::size_t row_group) { return owners_[row_group]; }
    Matrix fetch(const Client& client, const ClientSlice& slice,
                 std::span<const std::size_t> objects, VariationalStore::Field field);
    void publish(Owner& owner, std::span<const std::size_t> objects);
    void send_cluster_aggregates(std::span<const std::vector<std::size_t>> active_by_group);
    void receive_cluster_aggregates(Owner& owner);
    void send_beta_partials();
    void finalize_and_broadcast_beta();
    void receive_beta();
    void receive_model();

    ProblemShape shape_;
    FitConfig cfg_;
    ExecutionPlan plan_;
    VariationalStore store_;
    std::size_t k_, r1_, r2_;
    std::size_t workers_;
    Network net_;
    std::vector<Client> clients_;
    std::vector<Owner> owners_;  // one per row group
    std::vector<BetaOwner> beta_owners_;  // one per column group
    ModelParams server_params_;
    std::vector<double> trace_;
};

void Simulation::load(const LabelObservations& w) {
    w.validate(shape_);
    const PartitionSpec& spec = plan_.spec;
    std::map<std::string, Client> by_id;
    for (const auto& [key, site] : spec.site_of) {
        Client& c = by_id[site];
        c.id = site;
        auto it = std::find_if(c.slices.begin(), c.slices.end(),
                               [&](const ClientSlice& s) { return s.row_group == key.first; });
        if (it == c.slices.end()) {
            c.slices.push_back({});
            it = std::prev(c.slices.end());
            it->row_group = key.first;
            it->objects = spec.row_groups[key.first];
        }
        for (const ColumnRef& col : spec.column_groups[key.second]) {
            if (col.kind == Kind::Classifier) {
                it->classifier_cols.push_back(col);
            } else {
                it->clusterer_cols.push_back(col);
                it->clusterer_group.push_back(key.second);
            }
        }
    }
    for (auto& [id, c] : by_id) {
        for (ClientSlice& s : c.slices) {
            const std::size_t rows = s.objects.size();
            s.class_labels = LabelMatrix(rows, s.classifier_cols.size());
            s.cluster_labels = LabelMatrix(rows, s.clusterer_cols.size());
            for (std::size_t i = 0; i < rows; ++i) {
                for (std::size_t c2 = 0; c2 < s.classifier_cols.size(); ++c2) {
                    s.class_labels(i, c2) = w.class_labels(s.objects[i], s.classifier_cols[c2].index);
                }
                for (std::size_t c2 = 0; c2 < s.clusterer_cols.size(); ++c2) {
                    s.cluster_labels(i, c2) =
                        w.cluster_labels(s.objects[i], s.clusterer_cols[c2].index);
                }
            }
            s.phi.assign(s.clusterer_cols.size(), Matrix(rows, k_));
            for (std::size_t i = 0; i < rows; ++i) s.local[s.objects[i]] = i;
        }
        std::sort(c.slices.begin(), c.slices.end(),
                  [](const ClientSlice& a, const ClientSlice& b) { return a.row_group < b.row_group; });
        clients_.push_back(std::move(c));
    }

    for (std::size_t d = 0; d < spec.row_groups.size(); ++d) {
        Owner o;
        o.id = plan_.object_owner[d];
        o.row_group = d;
        o.objects = spec.row_groups[d];
        for (std::size_t i = 0; i < o.objects.size(); ++i) o.local[o.objects[i]] = i;
        o.vs = VariationalState(o.objects.size(), k_, 0);
        o.votes = Matrix(o.objects.size(), k_);
        o.agg.assign(o.objects.size(), ClusterAggregate(k_));
        o.active.assign(o.objects.size(), 1);
        o.previous.assign(o.objects.size(), 0.0);
        owners_.push_back(std::move(o));
    }
    for (std::size_t g = 0; g < spec.column_groups.size(); ++g) {
        beta_owners_.push_back({plan_.beta_owner[g], g, {}, {}});
    }
}

Matrix Simulation::fetch(const Client& client, const ClientSlice& slice,
                         std::span<const std::size_t> objects, VariationalStore::Field field) {
    const Owner& owner = owners_[slice.row_group];
    Matrix rows;
    std::string source;
    if (plan_.uses_store) {
        rows = store_.read(client.id, objects, field);
        source = kStoreId;
    } else {
        if (owner.id != client.id) {
            throw SimulationIntegrityError("fetch: " + client.id + " does not own row group " +
                                           std::to_string(slice.row_group + 1));
        }
        const Matrix& src = field == VariationalStore::Field::MuN ? owner.vs.mu_n : owner.vs.eps_n;
        rows = Matrix(objects.size(), k_);
        for (std::size_t i = 0; i < objects.size(); ++i) {
            std::ranges::copy(src.row(owner.local.at(objects[i])), rows.row(i).begin());
        }
        source = owner.id;
    }
    const char* name = field == VariationalStore::Field::MuN ? "mu_n" : "eps_n";
    net_.send(source, client.id, MessageKind::SharedVariationalRead,
              plain_payload(name, {objects.size(), k_}, rows.data(),
                            std::vector<std::size_t>(objects.begin(), objects.end())));
    return rows;
}

void Simulation::publish(Owner& owner, std::span<const std::size_t> objects) {
    if (!plan_.uses_store || objects.empty()) return;
    std::vector<std::size_t> local_rows;
    std::vector<double> values;
    for (std::size_t n : objects) {
        const std::size_t r = owner.local.at(n);
        local_rows.push_back(r);
        for (const Matrix* m : {&owner.vs.mu_n, &owner.vs.sigma_n2, &owner.vs.eps_n, &owner.vs.delta_n2}) {
            const auto row = m->row(r);
            values.insert(values.end(), row.begin(), row.end());
        }
        values.push_back(owner.vs.kappa[r]);
        values.push_back(owner.vs.xi[r]);
    }
    store_.write(owner.id, objects, owner.vs, local_rows);
    net_.send(owner.id, kStoreId, MessageKind::SharedVariationalWrite,
              plain_payload("state", {objects.size(), 4 * k_ + 2}, std::move(values),
                            std::vector<std::size_t>(objects.begin(), objects.end())));
}

void Simulation::send_beta_partials() {
    for (const Client& c : clients_) {
        // One message per destination, covering every clustering the client
        // holds for that column group.
        std::map<std::size_t, std::map<std::size_t, std::vector<ExactSum>>> by_group;
        for (const ClientSlice& s : c.slices) {
            std::vector<std::size_t> local_ids(s.objects.size());
            for (std::size_t i = 0; i < local_ids.size(); ++i) local_ids[i] = i;
            for (std::size_t j = 0; j < s.clusterer_cols.size(); ++j) {
                const std::size_t m = s.clusterer_cols[j].index;
                std::vector<int> labels(s.objects.size());
                for (std::size_t i = 0; i < labels.size(); ++i) labels[i] = s.cluster_labels(i, j);
                std::vector<ExactSum> counts =
                    partial_beta(s.phi[j], labels, shape_.clusters_per_clustering[m], local_ids);
                auto& slot = by_group[s.clusterer_group[j]][m];
                if (slot.empty()) {
                    slot = std::move(counts);
                } else {
                    for (std::size_t e = 0; e < slot.size(); ++e) slot[e].merge(counts[e]);
                }
            }
        }
        for (auto& [g, per_m] : by_group) {
            std::vector<ExactSum> sums;
            std::vector<ColumnRef> cols;
            std::size_t entries = 0;
            for (auto& [m, counts] : per_m) {
                cols.push_back({Kind::Clusterer, m});
                entries += counts.size();
                for (ExactSum& e : counts) sums.push_back(std::move(e));
            }
            net_.send(c.id, plan_.beta_owner[g], MessageKind::PartialSumBeta,
                      exact_payload("beta_counts", {entries}, std::move(sums), {}, std::move(cols)));
        }
    }
}

void Simulation::finalize_and_broadcast_beta() {
    for (BetaOwner& b : beta_owners_) {
        b.counts.clear();
        for (const Message& msg : net_.take(b.id, MessageKind::PartialSumBeta)) {
            std::size_t offset = 0;
            for (const ColumnRef& col : msg.payload.columns) {
                const std::size_t size = k_ * shape_.clusters_per_clustering[col.index];
                auto& slot = b.counts[col.index];
                if (slot.empty()) slot.resize(size);
                for (std::size_t e = 0; e < size; ++e) slot[e].merge(msg.payload.exact[offset + e]);
                offset += size;
            }
        }
        std::vector<double> values;
        std::vector<ColumnRef> cols;
        for (const auto& [m, counts] : b.counts) {
            const std::size_t km = shape_.clusters_per_clustering[m];
            b.beta[m] = finalize_beta(counts, k_, km, cfg_.beta_floor);
            values.insert(values.end(), b.beta[m].data().begin(), b.beta[m].data().end());
            cols.push_back({Kind::Clusterer, m});
        }
        if (cols.empty()) continue;
        std::set<std::string> holders;
        for (const auto& [key, site] : plan_.block_owner) {
            if (key.second == b.column_group) holders.insert(site);
        }
        for (const std::string& to : holders) {
            net_.send(b.id, to, MessageKind::ModelBroadcast,
                      plain_payload("beta", {values.size()}, values, {}, cols));
        }
    }
}

void Simulation::receive_beta() {
    for (Client& c : clients_) {
        const auto is_beta = [](const Message& m) { return m.payload.quantity == "beta"; };
        for (const Message& msg : net_.take_if(c.id, MessageKind::ModelBroadcast, is_beta)) {
            std::size_t offset = 0;
            for (const ColumnRef& col : msg.payload.columns) {
                const std::size_t km = shape_.clusters_per_clustering[col.index];
                Matrix beta(k_, km);
                std::copy_n(msg.payload.values.begin() + static_cast<std::ptrdiff_t>(offset), k_ * km,
                            beta.data().begin());
                c.beta[col.index] = std::move(beta);
                offset += k_ * km;
            }
        }
    }
}

// Broadcasts from the server to owners carry "mu" alone or "model" = mu,
// sigma2, delta2.
void Simulation::receive_model() {
    const auto is_model = [](const Message& m) {
        return m.payload.quantity == "mu" || m.payload.quantity == "model";
    };
    for (Owner& o : owners_) {
        std::vector<Message> inbound = net_.take_if(o.id, MessageKind::ModelBroadcast, is_model);
        if (inbound.empty()) continue;
        // Owners hosted on one node share the broadcast.
        const Payload& p = inbound.back().payload;
        for (Owner& same : owners_) {
            if (same.id != o.id) continue;
            same.params.mu.assign(p.values.begin(), p.values.begin() + static_cast<std::ptrdiff_t>(k_));
            if (p.quantity == "model") {
                same.params.sigma2.assign(p.values.begin() + static_cast<std::ptrdiff_t>(k_),
                                          p.values.begin() + static_cast<std::ptrdiff_t>(2 * k_));
                same.params.delta2 = p.values[2 * k_];
            }
        }
    }
}

void Simulation::send_cluster_aggregates(std::span<const std::vector<std::size_t>> active_by_group) {
    for (Client& c : clients_) {
        for (ClientSlice& s : c.slices) {
            if (s.clusterer_cols.empty()) continue;
            const std::vector<std::size_t>& active = active_by_group[s.row_group];
            if (active.empty()) continue;
            const Owner& owner = owners_[s.row_group];
            std::vector<std::size_t> rows(active.size());
            for (std::size_t i = 0; i < active.size(); ++i) {
                rows[i] = s.local.at(active[i]);
            }
            std::vector<ExactSum> mass;
            std::vector<ExactSum> value;
            mass.reserve(active.size() * k_);
            for (std::size_t i = 0; i < active.size(); ++i) {
                ClusterAggregate agg(k_);
                for (std::size_t j = 0; j < s.clusterer_cols.size(); ++j) {
                    agg.add_column(s.phi[j].row(rows[i]), c.beta.at(s.clusterer_cols[j].index),
                                   s.cluster_labels(rows[i], j));
                }
                for (ExactSum& e : agg.phi_mass) mass.push_back(std::move(e));
                value.push_back(std::move(agg.value));
            }
            net_.send(c.id, owner.id, MessageKind::PhiClassMass,
                      exact_payload("phi_mass", {active.size(), k_}, std::move(mass), active,
                                    s.clusterer_cols));
            net_.send(c.id, owner.id, MessageKind::ClusterElbo,
                      exact_payload("cluster_bound", {active.size()}, std::move(value), active,
                                    s.clusterer_cols));
        }
    }
}

void Simulation::receive_cluster_aggregates(Owner& owner) {
    for (std::size_t i = 0; i < owner.agg.size(); ++i) {
        if (owner.active[i]) owner.agg[i] = ClusterAggregate(k_);
    }
    // Several owners may share a node id; take only this row group's payloads.
    const auto mine = [&](const Message& msg) {
        return !msg.payload.objects.empty() && owner.local.count(msg.payload.objects.front()) > 0;
    };
    for (const Message& msg : net_.take_if(owner.id, MessageKind::PhiClassMass, mine)) {
        for (std::size_t i = 0; i < msg.payload.objects.size(); ++i) {
            ClusterAggregate& agg = owner.agg[owner.local.at(msg.payload.objects[i])];
            for (std::size_t c = 0; c < k_; ++c) agg.phi_mass[c].merge(msg.payload.exact[i * k_ + c]);
        }
    }
    for (const Message& msg : net_.take_if(owner.id, MessageKind::ClusterElbo, mine)) {
        for (std::size_t i = 0; i < msg.payload.objects.size(); ++i) {
            owner.agg[owner.local.at(msg.payload.objects[i])].value.merge(msg.payload.exact[i]);
        }
    }
}

void Simulation::setup() {
    net_.at(0, Phase::Setup, 0);
    for (const Client& c : clients_) {
        for (const ClientSlice& s : c.slices) {
            if (s.classifier_cols.empty()) continue;
            std::vector<double> counts(s.objects.size() * k_, 0.0);
            for (std::size_t i = 0; i < s.objects.size(); ++i) {
                for (std::size_t l = 0; l < s.classifier_cols.size(); ++l) {
                    counts[i * k_ + static_cast<std::size_t>(s.class_labels(i, l))] += 1.0;
                }
            }
            Payload p = plain_payload("vote_counts", {s.objects.size(), k_}, std::move(counts),
                                      s.objects, s.classifier_cols);
            p.label_valued = true;
            net_.send(c.id, owners_[s.row_group].id, MessageKind::VoteCounts, std::move(p));
        }
    }
    for (Owner& o : owners_) {
        const auto mine = [&](const Message& msg) { return o.local.count(msg.payload.objects.front()) > 0; };
        for (const Message& msg : net_.take_if(o.id, MessageKind::VoteCounts, mine)) {
            for (std::size_t i = 0; i < msg.payload.objects.size(); ++i) {
                const std::size_t r = o.local.at(msg.payload.objects[i]);
                for (std::size_t c = 0; c < k_; ++c) o.votes(r, c) += msg.payload.values[i * k_ + c];
            }
        }
        for (std::size_t r = 0; r < o.objects.size(); ++r) {
            const std::vector<double> row = initial_mu_row(o.votes.row(r), r1_);
            std::ranges::copy(row, o.vs.mu_n.row(r).begin());
            std::ranges::copy(row, o.vs.eps_n.row(r).begin());
            refresh_taylor_points(o.vs, r);
        }
    }

    net_.at(0, Phase::Setup, 1);
    for (Owner& o : owners_) publish(o, o.objects);

    net_.at(0, Phase::Setup, 2);
    for (Client& c : clients_) {
        for (ClientSlice& s : c.slices) {
            if (s.clusterer_cols.empty()) continue;
            const Matrix mu = fetch(c, s, s.objects, VariationalStore::Field::MuN);
            for (std::size_t i = 0; i < s.objects.size(); ++i) {
                for (std::size_t j = 0; j < s.clusterer_cols.size(); ++j) {
                    initial_phi_row(mu.row(i), cfg_.seed, s.objects[i], s.clusterer_cols[j].index,
                                    s.phi[j].row(i));
                }
            }
        }
    }

    net_.at(0, Phase::Setup, 3);
    send_beta_partials();
    for (const Owner& o : owners_) {
        std::vector<std::size_t> ids(o.objects.size());
        for (std::size_t i = 0; i < ids.size(); ++i) ids[i] = i;
        net_.send(o.id, kServerId, MessageKind::PartialSumMu,
                  exact_payload("mu_n_sum", {k_}, partial_mu(o.vs, ids)));
    }

    net_.at(0, Phase::Setup, 4);
    finalize_and_broadcast_beta();
    std::vector<ExactSum> mu_sum(k_);
    for (const Message& msg : net_.take(kServerId, MessageKind::PartialSumMu)) {
        for (std::size_t c = 0; c < k_; ++c) mu_sum[c].merge(msg.payload.exact[c]);
    }
    server_params_.mu = finalize_mu(mu_sum, shape_.n_objects);
    server_params_.sigma2.assign(k_, 1.0);
    server_params_.delta2 = 1.0;
    std::set<std::string> owner_ids;
    for (const Owner& o : owners_) owner_ids.insert(o.id);
    std::vector<double> model = server_params_.mu;
    model.insert(model.end(), server_params_.sigma2.begin(), server_params_.sigma2.end());
    model.push_back(server_params_.delta2);
    for (const std::string& id : owner_ids) {
        net_.send(kServerId, id, MessageKind::ModelBroadcast, plain_payload("model", {2 * k_ + 1}, model));
    }
    receive_beta();
    receive_model();
}

double Simulation::bound(std::size_t outer) {
    net_.at(outer, Phase::Bound, 0);
    std::vector<std::vector<std::size_t>> everything;
    for (Owner& o : owners_) {
        std::fill(o.active.begin(), o.active.end(), 1);
        everything.push_back(o.objects);
    }
    send_cluster_aggregates(everything);
    for (Owner& o : owners_) receive_cluster_aggregates(o);

    net_.at(outer, Phase::Bound, 1);
    for (Owner& o : owners_) {
        ExactSum partial;
        for (std::size_t r = 0; r < o.objects.size(); ++r) {
            partial.add(object_value(o.params, object_rows(o.vs, r), o.votes.row(r), r1_, o.agg[r], r2_));
        }
        net_.send(o.id, kServerId, MessageKind::PartialSumElbo, exact_payload("bound", {1}, {partial}));
    }
    ExactSum total;
    for (const Message& msg : net_.take(kServerId, MessageKind::PartialSumElbo)) total.merge(msg.payload.exact[0]);
    return total.value();
}

void Simulation::e_step(std::size_t outer) {
    const double step0 = cfg_.ascent.initial_step;
    for (Owner& o : owners_) {
        std::fill(o.active.begin(), o.active.end(), 1);
        std::fill(o.previous.begin(), o.previous.end(), 0.0);
        o.steps.assign(o.objects.size(), BlockSteps{step0, step0, step0, step0});
    }
    for (std::size_t sweep = 0; sweep < cfg_.estep_max_sweeps; ++sweep) {
        std::vector<std::vector<std::size_t>> active_by_group;
        bool any = false;
        for (Owner& o : owners_) {
            active_by_group.push_back(o.active_objects());
            any = any || !active_by_group.back().empty();
            for (std::size_t r = 0; r < o.objects.size(); ++r) {
                if (o.active[r]) refresh_taylor_points(o.vs, r);
            }
        }
        if (!any) break;

        net_.at(outer, Phase::EStep, 3 * sweep);
        for (Client& c : clients_) {
            for (ClientSlice& s : c.slices) {
                const std::vector<std::size_t>& active = active_by_group[s.row_group];
                if (s.clusterer_cols.empty() || active.empty()) continue;
                const Matrix eps = fetch(c, s, active, VariationalStore::Field::EpsN);
                for (std::size_t i = 0; i < active.size(); ++i) {
                    const std::size_t row = s.local.at(active[i]);
                    for (std::size_t j = 0; j < s.clusterer_cols.size(); ++j) {
                        phi_row_update(eps.row(i), c.beta.at(s.clusterer_cols[j].index),
                                       s.cluster_labels(row, j), cfg_, s.phi[j].row(row));
                    }
                }
            }
        }

        net_.at(outer, Phase::EStep, 3 * sweep + 1);
        send_cluster_aggregates(active_by_group);

        net_.at(outer, Phase::EStep, 3 * sweep + 2);
        for (std::size_t d = 0; d < owners_.size(); ++d) {
            Owner& o = owners_[d];
            receive_cluster_aggregates(o);
            const std::vector<std::size_t>& active = active_by_group[d];
            std::vector<std::size_t> rows(active.size());
            for (std::size_t i = 0; i < active.size(); ++i) rows[i] = o.local.at(active[i]);
            parallel_for(rows.size(), workers_, [&](std::size_t i) {
                const std::size_t r = rows[i];
                const std::vector<double> mass = o.agg[r].mass_values();
                ascend_object(o.params, o.vs, r, o.votes.row(r), r1_, mass, r2_, cfg_, o.steps[r]);
                const double current =
                    object_value(o.params, object_rows(o.vs, r), o.votes.row(r), r1_, o.agg[r], r2_);
                if (!std::isfinite(current)) {
                    throw NumericalFailure("e-step: object bound is not finite for object " +
                                           std::to_string(active[i]));
                }
                if (sweep > 0 && object_converged(o.previous[r], current, cfg_.estep_rel_tol)) {
                    o.active[r] = 0;
                } else {
                    o.previous[r] = current;
                }
            });
            publish(o, active);
        }
    }
}

void Simulation::m_step(std::size_t outer) {
    std::set<std::string> owner_ids;
    for (const Owner& o : owners_) owner_ids.insert(o.id);

    net_.at(outer, Phase::MStep, 0);
    for (const Owner& o : owners_) {
        std::vector<std::size_t> ids(o.objects.size());
        for (std::size_t i = 0; i < ids.size(); ++i) ids[i] = i;
        net_.send(o.id, kServerId, MessageKind::PartialSumMu,
                  exact_payload("mu_n_sum", {k_}, partial_mu(o.vs, ids)));
        net_.send(o.id, kServerId, MessageKind::PartialSumDelta2,
                  exact_payload("delta2_stat", {1}, {partial_delta2(o.vs, ids)}));
    }
    send_beta_partials();

    std::vector<ExactSum> mu_sum(k_);
    for (const Message& msg : net_.take(kServerId, MessageKind::PartialSumMu)) {
        for (std::size_t c = 0; c < k_; ++c) mu_sum[c].merge(msg.payload.exact[c]);
    }
    ExactSum delta_sum;
    for (const Message& msg : net_.take(kServerId, MessageKind::PartialSumDelta2)) {
        delta_sum.merge(msg.payload.exact[0]);
    }
    server_params_.mu = finalize_mu(mu_sum, shape_.n_objects);
    server_params_.delta2 = finalize_delta2(delta_sum, shape_.n_objects, k_);

    net_.at(outer, Phase::MStep, 1);
    finalize_and_broadcast_beta();
    for (const std::string& id : owner_ids) {
        net_.send(kServerId, id, MessageKind::ModelBroadcast, plain_payload("mu", {k_}, server_params_.mu));
    }
    receive_beta();
    receive_model();

    net_.at(outer, Phase::MStep, 2);
    for (const Owner& o : owners_) {
        std::vector<std::size_t> ids(o.objects.size());
        for (std::size_t i = 0; i < ids.size(); ++i) ids[i] = i;
        net_.send(o.id, kServerId, MessageKind::PartialSumSigma2Stat,
                  exact_payload("sigma2_stat", {k_}, partial_sigma2_spread(o.vs, o.params.mu, ids)));
    }
    std::vector<ExactSum> spread(k_);
    for (const Message& msg : net_.take(kServerId, MessageKind::PartialSumSigma2Stat)) {
        for (std::size_t c = 0; c < k_; ++c) spread[c].merge(msg.payload.exact[c]);
    }
    server_params_.sigma2 = finalize_sigma2(spread, shape_.n_objects);

    net_.at(outer, Phase::MStep, 3);
    std::vector<double> model = server_params_.mu;
    model.insert(model.end(), server_params_.sigma2.begin(), server_params_.sigma2.end());
    model.push_back(server_params_.delta2);
    for (const std::string& id : owner_ids) {
        net_.send(kServerId, id, MessageKind::ModelBroadcast, plain_payload("model", {2 * k_ + 1}, model));
    }
    receive_model();
}

DistributedResult Simulation::collect() {
    FitResult fit;
    fit.params = server_params_;
    fit.params.beta.assign(r2_, Matrix());
    for (const BetaOwner& b : beta_owners_) {
        for (const auto& [m, beta] : b.beta) fit.params.beta[m] = beta;
    }
    VariationalState& vs = fit.state;
    vs = VariationalState(shape_.n_objects, k_, r2_);
    for (const Owner& o : owners_) {
        for (std::size_t r = 0; r < o.objects.size(); ++r) {
            const std::size_t n = o.objects[r];
            std::ranges::copy(o.vs.mu_n.row(r), vs.mu_n.row(n).begin());
            std::ranges::copy(o.vs.sigma_n2.row(r), vs.sigma_n2.row(n).begin());
            std::ranges::copy(o.vs.eps_n.row(r), vs.eps_n.row(n).begin());
            std::ranges::copy(o.vs.delta_n2.row(r), vs.delta_n2.row(n).begin());
            vs.kappa[n] = o.vs.kappa[r];
            vs.xi[n] = o.vs.xi[r];
        }
    }
    for (const Client& c : clients_) {
        for (const ClientSlice& s : c.slices) {
            for (std::size_t j = 0; j < s.clusterer_cols.size(); ++j) {
                Matrix& dst = vs.phi[s.clusterer_cols[j].index];
                for (std::size_t i = 0; i < s.objects.size(); ++i) {
                    std::ranges::copy(s.phi[j].row(i), dst.row(s.objects[i]).begin());
                }
            }
        }
    }
    fit.elbo_trace = trace_;
    fit.posterior = posterior_from_state(vs);
    return {std::move(fit), net_.release(), plan_};
}

DistributedResult Simulation::run() {
    setup();
    double previous = bound(0);
    std::size_t iterations = 0;
    try {
        for (std::size_t iter = 0; iter < cfg_.outer_max_iter; ++iter) {
            e_step(iter + 1);
            m_step(iter + 1);
            const double current = bound(iter + 1);
            if (!std::isfinite(current)) throw NumericalFailure("fit: bound is not finite");
            trace_.push_back(current);
            iterations = iter + 1;
            const bool done = std::abs(current - previous) < cfg_.outer_rel_tol * std::abs(previous);
            previous = current;
            if (done) break;
        }
    } catch (const NumericalFailure& e) {
        throw FitAborted(e.what(), trace_);
    }
    DistributedResult result = collect();
    result.fit.posterior.final_elbo = previous;
    result.fit.posterior.n_outer_iterations = iterations;
    return result;
}

}  // namespace

DistributedResult run_distributed(const LabelObservations& w, const ProblemShape& shape,
                                  const FitConfig& cfg, const PartitionSpec& spec) {
    cfg.validate();
    Simulation sim(w, shape, cfg, spec);
    return sim.run();
}

}  // namespace cvem::dist
