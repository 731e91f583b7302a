#include <doctest.h>

#include <cmath>
#include <sstream>

#include "consensus_vem/distributed/audit.hpp"
#include "consensus_vem/distributed/equivalence.hpp"
#include "consensus_vem/distributed/simulator.hpp"
#include "fixtures.hpp"

using namespace cvem;
using namespace cvem::dist;

namespace {

const fixtures::Sampled& data100() {
    static const auto d = fixtures::sampled(21, fixtures::make_shape(100, 3, 4, 3, 3));
    return d;
}

FitConfig quick() {
    FitConfig cfg;
    cfg.outer_max_iter = 8;
    cfg.seed = 4;
    return cfg;
}

const FitResult& central() {
    static const auto r = fit(data100().w, data100().shape, quick());
    return r;
}

PartitionSpec column_spec(std::vector<std::vector<std::string>> groups) {
    PartitionSpec spec;
    spec.mode = PartitionMode::Column;
    for (const auto& g : groups) {
        std::vector<ColumnRef> cols;
        for (const auto& name : g) cols.push_back(ColumnRef::parse(name));
        spec.column_groups.push_back(cols);
    }
    return spec;
}

std::size_t last_iteration(const MessageLog& log) {
    std::size_t last = 0;
    for (const auto& m : log.messages()) last = std::max(last, m.outer_iter);
    return last;
}

}  // namespace

TEST_CASE("column names and partition helpers") {
    CHECK(ColumnRef::parse("clf_3").kind == ColumnRef::Kind::Classifier);
    CHECK(ColumnRef::parse("clf_3").index == 2);
    CHECK(ColumnRef{ColumnRef::Kind::Clusterer, 0}.name() == "clu_1");
    CHECK_THROWS(ColumnRef::parse("clx_1"));
    CHECK_THROWS(ColumnRef::parse("clf_0"));
    const auto rp = row_partition(10, 3);
    REQUIRE(rp.row_groups.size() == 3);
    CHECK(rp.row_groups[0].size() + rp.row_groups[1].size() + rp.row_groups[2].size() == 10);
    CHECK(parse_partition_mode("arbitrary") == PartitionMode::Arbitrary);
    CHECK_THROWS(parse_partition_mode("diagonal"));
}

TEST_CASE("partition validation") {
    const auto& s = data100().shape;
    auto overlap = row_partition(100, 2);
    overlap.row_groups[1].push_back(0);
    CHECK_THROWS_AS(overlap.normalized(s).validate(s), InvalidArgument);
    auto missing = row_partition(100, 2);
    missing.row_groups[1].pop_back();
    CHECK_THROWS_AS(missing.normalized(s).validate(s), InvalidArgument);
    auto cols = column_spec({{"clf_1", "clf_2", "clu_1"}, {"clf_3", "clf_4", "clu_2"}});
    CHECK_THROWS_AS(cols.normalized(s).validate(s), InvalidArgument);  // clu_3 uncovered
    auto reserved = row_partition(100, 2).normalized(s);
    reserved.site_of[{0, 0}] = "server";
    CHECK_THROWS_AS(reserved.validate(s), InvalidArgument);
}

TEST_CASE("plans") {
    const auto& s = data100().shape;
    SUBCASE("row mode") {
        const auto p = plan(row_partition(100, 2), s);
        CHECK(p.count(NodeKind::Client) == 2);
        CHECK(p.count(NodeKind::Server) == 1);
        CHECK(p.executor(UpdateKind::Beta) == NodeKind::Server);
        CHECK(p.executor(UpdateKind::MuN) == NodeKind::Client);
        CHECK_FALSE(p.uses_store);
    }
    SUBCASE("column mode") {
        const auto p = plan(column_spec({{"clf_1", "clf_2", "clu_1", "clu_2"}, {"clf_3", "clf_4", "clu_3"}}), s);
        CHECK(p.count(NodeKind::Client) == 2);
        CHECK(p.executor(UpdateKind::Phi) == NodeKind::Client);
        CHECK(p.executor(UpdateKind::Beta) == NodeKind::Client);
        CHECK(p.executor(UpdateKind::MuN) == NodeKind::Server);
        CHECK(p.beta_owner[0] != p.beta_owner[1]);
        CHECK(p.uses_store);
    }
    SUBCASE("arbitrary mode, six-site layout") {
        const auto p = plan(six_site_layout(100), s);
        CHECK(p.count(NodeKind::AuxServer) == 4);
        CHECK(p.count(NodeKind::AuxClient) == 3);
        CHECK(p.count(NodeKind::Server) == 1);
        CHECK(p.count(NodeKind::Client) == 6);
        CHECK(p.executor(UpdateKind::MuN) == NodeKind::AuxServer);
        CHECK(p.executor(UpdateKind::Beta) == NodeKind::AuxClient);
    }
    SUBCASE("a lone classifier column is rejected") {
        CHECK_THROWS_AS(plan(column_spec({{"clf_1"}, {"clf_2", "clf_3", "clf_4", "clu_1", "clu_2", "clu_3"}}), s),
                        PlanRejected);
        CHECK_NOTHROW(plan(column_spec({{"clu_1"}, {"clf_1", "clf_2", "clf_3", "clf_4", "clu_2", "clu_3"}}), s));
    }
}

TEST_CASE("store enforces scope") {
    const auto& s = data100().shape;
    const auto p = plan(six_site_layout(100), s);
    VariationalStore store(p, 100, 3);
    VariationalState local(1, 3, 0);
    const std::vector<std::size_t> rows{0};
    // object 0 is in row group 0; C1 and C2 hold its blocks, AS1 owns it
    const std::vector<std::size_t> obj{0};
    const std::string owner = p.object_owner[store.row_group_of(0)];
    CHECK_NOTHROW(store.write(owner, obj, local, rows));
    CHECK(store.version() == 1);
    CHECK_THROWS_AS(store.write("C1", obj, local, rows), SimulationIntegrityError);
    CHECK_NOTHROW(store.read("C1", obj, VariationalStore::Field::EpsN));
    CHECK_THROWS_AS(store.read("C5", obj, VariationalStore::Field::MuN), SimulationIntegrityError);
    const std::vector<std::size_t> ghost{1000};
    CHECK_THROWS_AS(store.read(owner, ghost, VariationalStore::Field::MuN), SimulationIntegrityError);
}

TEST_CASE("distributed runs match the central fit") {
    const auto& d = data100();
    const auto ref = RunSummary::of(central());
    std::vector<std::pair<std::string, PartitionSpec>> layouts{
        {"row D=2", row_partition(100, 2)},
        {"row D=4", row_partition(100, 4)},
        {"column 2", column_spec({{"clf_1", "clf_2", "clu_1", "clu_2"}, {"clf_3", "clf_4", "clu_3"}})},
        {"column 3", column_spec({{"clf_1", "clf_2", "clu_1"}, {"clu_2"}, {"clf_3", "clf_4", "clu_3"}})},
        {"arbitrary", six_site_layout(100)},
    };
    for (const auto& [name, spec] : layouts) {
        CAPTURE(name);
        const auto r = run_distributed(d.w, d.shape, quick(), spec);
        const auto rep = verify_equivalence(ref, RunSummary::of(r.fit), 1e-9);
        CHECK(rep.passed);
        CHECK(rep.max_posterior_diff <= 1e-9);
        CHECK(audit_privacy(r.log, spec.normalized(d.shape)).empty());
    }
}

TEST_CASE("row mode message traffic") {
    const auto& d = data100();
    const auto r2 = run_distributed(d.w, d.shape, quick(), row_partition(100, 2));
    const auto r4 = run_distributed(d.w, d.shape, quick(), row_partition(100, 4));
    const std::size_t it = 2;
    const std::size_t n2 = r2.log.count_in_iteration(it);
    const std::size_t n4 = r4.log.count_in_iteration(it);
    CHECK(n4 == 2 * n2);  // linear in D

    std::size_t beta_msgs = 0;
    for (const auto& m : r2.log.messages()) {
        if (m.outer_iter == it && m.kind == MessageKind::PartialSumBeta) {
            CHECK(m.to == kServerId);
            ++beta_msgs;
        }
    }
    CHECK(beta_msgs == 2);

    // doubling N leaves the per-iteration count unchanged
    const auto big = fixtures::sampled(22, fixtures::make_shape(200, 3, 4, 3, 3));
    const auto rb = run_distributed(big.w, big.shape, quick(), row_partition(200, 2));
    CHECK(rb.log.count_in_iteration(it) == n2);
}

TEST_CASE("partial sums reproduce the central quantities") {
    const auto& d = data100();
    const auto r = run_distributed(d.w, d.shape, quick(), row_partition(100, 4));
    const std::size_t last = last_iteration(r.log);
    std::vector<double> mu_sum(3, 0.0);
    double delta_sum = 0.0;
    for (const auto& m : r.log.messages()) {
        if (m.outer_iter != last || m.phase != Phase::MStep) continue;
        if (m.kind == MessageKind::PartialSumMu) {
            for (std::size_t i = 0; i < 3; ++i) mu_sum[i] += m.payload.values[i];
        }
        if (m.kind == MessageKind::PartialSumDelta2) delta_sum += m.payload.values[0];
    }
    const auto& c = central();
    for (std::size_t i = 0; i < 3; ++i) {
        CHECK(std::abs(mu_sum[i] / 100 - c.params.mu[i]) <= 1e-12 * std::max(1.0, std::abs(c.params.mu[i])));
    }
    CHECK(std::abs(delta_sum / 300 - c.params.delta2) <= 1e-12 * c.params.delta2);
}

TEST_CASE("vote counts from two sites assemble the full vote") {
    const auto& d = data100();
    const auto spec = column_spec({{"clf_1", "clf_2", "clu_1", "clu_2"}, {"clf_3", "clf_4", "clu_3"}});
    const auto r = run_distributed(d.w, d.shape, quick(), spec);
    Matrix assembled(100, 3, 0.0);
    std::size_t payloads = 0;
    for (const auto& m : r.log.messages()) {
        if (m.kind != MessageKind::VoteCounts) continue;
        ++payloads;
        CHECK(m.payload.columns.size() == 2);
        for (std::size_t i = 0; i < m.payload.objects.size(); ++i) {
            for (std::size_t c = 0; c < 3; ++c) assembled(m.payload.objects[i], c) += m.payload.values[i * 3 + c];
        }
    }
    CHECK(payloads == 2);
    CHECK(assembled == vote_counts(d.w, 3));
    // so the classifier term sum_n sum_i votes_ni mu_ni is the central one
    double from_sites = 0.0, direct = 0.0;
    const Matrix votes = vote_counts(d.w, 3);
    for (std::size_t n = 0; n < 100; ++n) {
        for (std::size_t i = 0; i < 3; ++i) {
            from_sites += assembled(n, i) * r.fit.state.mu_n(n, i);
            direct += votes(n, i) * central().state.mu_n(n, i);
        }
    }
    CHECK(from_sites == direct);
}

TEST_CASE("audit detects each injected fault") {
    const auto& d = data100();
    for (const auto& spec : {row_partition(100, 2), six_site_layout(100)}) {
        const auto r = run_distributed(d.w, d.shape, quick(), spec);
        const auto norm = spec.normalized(d.shape);
        CHECK(audit_privacy(r.log, norm).empty());
        const auto leaked = inject_fault(r.log, FaultKind::RawLabelLeak, d.w);
        const auto leak = audit_privacy(leaked, norm);
        REQUIRE(leak.size() == 1);
        CHECK(leak[0].rule == "raw-label");
        // the violation names the injected message
        CHECK(leaked.messages().at(leak[0].message_index).payload.quantity == "cluster_label");
        const auto single = audit_privacy(inject_fault(r.log, FaultKind::SingleColumnVote, d.w), norm);
        REQUIRE(single.size() == 1);
        CHECK(single[0].rule == "single-column-vote");
        if (spec.mode != PartitionMode::Row) {
            const auto beta = audit_privacy(inject_fault(r.log, FaultKind::BetaThroughServer, d.w), norm);
            REQUIRE(beta.size() == 1);
            CHECK(beta[0].rule == "beta-through-server");
        }
    }
}

TEST_CASE("equivalence checker") {
    const auto ref = RunSummary::of(central());
    const auto same = verify_equivalence(ref, ref, 1e-9);
    CHECK(same.passed);
    CHECK(same.max_posterior_diff == 0.0);
    CHECK(same.max_trace_rel_diff == 0.0);

    FitConfig other = quick();
    other.seed = 5;
    const auto& d = data100();
    const auto r = run_distributed(d.w, d.shape, other, row_partition(100, 2));
    const auto rep = verify_equivalence(ref, RunSummary::of(r.fit), 1e-9);
    CHECK_FALSE(rep.passed);
    CHECK(rep.first_object_divergence.has_value());
    CHECK(rep.first_trace_divergence.has_value());
    CHECK_FALSE(rep.describe().empty());

    auto wrong_shape = ref;
    wrong_shape.posterior.class_posteriors = Matrix(3, 3);
    CHECK_THROWS_AS(verify_equivalence(ref, wrong_shape, 1e-9), InvalidArgument);
}

TEST_CASE("message log ordering and JSONL output") {
    const auto& d = data100();
    const auto r = run_distributed(d.w, d.shape, quick(), row_partition(100, 2));
    const auto& msgs = r.log.messages();
    for (std::size_t i = 1; i < msgs.size(); ++i) {
        const auto key = [](const Message& m) {
            return std::make_tuple(m.outer_iter, static_cast<int>(m.phase), m.round, m.from, m.to);
        };
        CHECK(key(msgs[i - 1]) <= key(msgs[i]));
    }
    std::ostringstream out;
    r.log.write_jsonl(out);
    std::size_t lines = 0;
    for (char c : out.str()) lines += c == '\n';
    CHECK(lines == r.log.size());
    CHECK(out.str().find("\"payload_checksum\"") != std::string::npos);

    const auto again = run_distributed(d.w, d.shape, quick(), row_partition(100, 2));
    std::ostringstream out2;
    again.log.write_jsonl(out2, true);
    std::ostringstream out3;
    r.log.write_jsonl(out3, true);
    CHECK(out2.str() == out3.str());
}
