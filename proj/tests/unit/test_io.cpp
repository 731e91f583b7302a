#include <doctest.h>

#include <cmath>
#include <sstream>

#include "consensus_vem/errors.hpp"
#include "consensus_vem/io/json_io.hpp"
#include "consensus_vem/io/labels_csv.hpp"
#include "consensus_vem/io/posteriors_csv.hpp"
#include "fixtures.hpp"

using namespace cvem;
using namespace cvem::io;

namespace {

LabelsFile parse(const std::string& text) {
    std::istringstream in(text);
    return parse_labels_csv(in);
}

std::size_t error_line(const std::string& text) {
    try {
        parse(text);
    } catch (const ParseError& e) {
        return e.line();
    }
    return 0;
}

}  // namespace

TEST_CASE("labels CSV round trip") {
    const std::string text =
        "object_id,clf_1,clf_2,clu_1\n"
        "10,1,2,3\n"
        "11,2,2,1\n"
        "12,1,1,2\n";
    const auto f = parse(text);
    CHECK(f.shape.n_objects == 3);
    CHECK(f.shape.n_classes == 2);
    CHECK(f.shape.n_classifiers == 2);
    CHECK(f.shape.clusters_per_clustering == std::vector<std::size_t>{3});
    CHECK(f.w.class_labels(0, 1) == 1);
    CHECK(f.w.cluster_labels(0, 0) == 2);
    CHECK(f.object_ids == std::vector<std::int64_t>{10, 11, 12});

    std::ostringstream out;
    write_labels_csv(out, f);
    const auto g = parse(out.str());
    CHECK(g.w == f.w);
    CHECK(g.shape == f.shape);
    CHECK(g.object_ids == f.object_ids);
    std::ostringstream again;
    write_labels_csv(again, g);
    CHECK(again.str() == out.str());
}

TEST_CASE("labels CSV header overrides") {
    const auto f = parse("# k=4\n# km=5\nobject_id,clf_1,clu_1\n1,3,1\n2,1,2\n");
    CHECK(f.shape.n_classes == 4);
    CHECK(f.shape.clusters_per_clustering == std::vector<std::size_t>{5});
    CHECK(error_line("# k=2\nobject_id,clf_1,clf_2\n1,1,3\n") == 3);
}

TEST_CASE("labels CSV errors name the line") {
    CHECK(error_line("object_id,clf_1,clu_1\n1,1,1\n2,2,0\n") == 3);          // cluster label 0
    CHECK(error_line("object_id,clf_1,clu_1\n1,1,1\n2,2\n") == 3);            // ragged
    CHECK(error_line("object_id,clf_1,clu_1\n1,1,1\n\n2,x,1\n") == 4);        // non-integer
    CHECK(error_line("object_id,clf_1,clu_1\n1,1,1\n1,2,1\n") == 3);          // duplicate id
    CHECK(error_line("object_id,clf_1,clu_1\n1,1.5,1\n") == 2);
    CHECK(error_line("object_id,clu_1,clf_1\n1,1,1\n") == 1);                 // column order
    CHECK(error_line("id,clf_1\n1,1\n") == 1);
    CHECK(error_line("object_id,clf_1,clf_2\n") > 0);                         // no rows
    try {
        parse("object_id,clf_1,clu_1\n1,1,1\n2,2,0\n");
    } catch (const ParseError& e) {
        CHECK(std::string(e.what()).find("line 3") != std::string::npos);
    }
}

TEST_CASE("posteriors CSV") {
    const auto d = fixtures::sampled(3, fixtures::make_shape(30, 3, 3, 2));
    const auto r = fit(d.w, d.shape);
    std::vector<std::int64_t> ids(30);
    for (std::size_t i = 0; i < 30; ++i) ids[i] = static_cast<std::int64_t>(1000 - 7 * i);  // descending
    std::ostringstream out;
    write_posteriors_csv(out, r.posterior, ids);
    std::istringstream in(out.str());
    const auto p = parse_posteriors_csv(in);
    REQUIRE(p.object_ids.size() == 30);
    for (std::size_t row = 1; row < 30; ++row) CHECK(p.object_ids[row - 1] < p.object_ids[row]);
    for (std::size_t row = 0; row < 30; ++row) {
        const std::size_t n = 29 - row;
        double sum = 0.0;
        for (std::size_t c = 0; c < 3; ++c) {
            CHECK(std::abs(p.class_posteriors(row, c) - r.posterior.class_posteriors(n, c)) <= 1e-15);
            sum += p.class_posteriors(row, c);
        }
        CHECK(std::abs(sum - 1.0) <= 1e-9);
        CHECK(p.hard_labels[row] == static_cast<int>(argmax(p.class_posteriors.row(row))));
    }
    CHECK(out.str().rfind("object_id,p_class_1,p_class_2,p_class_3,hard_label\n", 0) == 0);
}

TEST_CASE("truth CSV") {
    const auto d = fixtures::sampled(4, fixtures::make_shape(12, 3, 2, 2));
    std::ostringstream out;
    write_truth_csv(out, d.truth, default_object_ids(12));
    std::istringstream in(out.str());
    const auto t = parse_truth_csv(in);
    CHECK(t.labels == d.labels);
    CHECK(t.object_ids == default_object_ids(12));
}

TEST_CASE("model JSON") {
    const auto s = fixtures::make_shape(1, 3, 1, 2, 4);
    const auto p = fixtures::recovery_params(s);
    const auto q = parse_model_json(model_to_json(p));
    CHECK(q.mu == p.mu);
    CHECK(q.sigma2 == p.sigma2);
    CHECK(q.delta2 == p.delta2);
    REQUIRE(q.beta.size() == 2);
    CHECK(q.beta[1] == p.beta[1]);
    CHECK_THROWS_AS(parse_model_json("{\"mu\": [0]}"), InvalidArgument);
    CHECK_THROWS_AS(parse_model_json("{\"mu\": [0,"), ParseError);
}

TEST_CASE("partition JSON") {
    const std::vector<std::int64_t> ids{5, 6, 7, 8};
    const std::string text = R"({"mode": "arbitrary",
        "row_groups": [[5, 6], [7, 8]],
        "column_groups": [["clf_1", "clf_2"], ["clu_1"]],
        "site_of": {"1,1": "A", "1,2": "B", "2,1": "B", "2,2": "C"}})";
    const auto spec = parse_partition_json(text, ids);
    CHECK(spec.mode == dist::PartitionMode::Arbitrary);
    CHECK(spec.row_groups[1] == std::vector<std::size_t>{2, 3});
    CHECK(spec.column_groups[1][0].name() == "clu_1");
    CHECK(spec.site_of.at({1, 0}) == "B");
    const auto again = parse_partition_json(partition_to_json(spec, ids), ids);
    CHECK(again.row_groups == spec.row_groups);
    CHECK(again.column_groups == spec.column_groups);
    CHECK(again.site_of == spec.site_of);

    CHECK_THROWS_AS(parse_partition_json(R"({"mode": "row", "row_groups": [[9]]})", ids), InvalidArgument);
    CHECK_THROWS_AS(parse_partition_json(R"({"mode": "row", "site_of": {"0,1": "A"}})", ids), InvalidArgument);
    CHECK_THROWS_AS(parse_partition_json(R"({"mode": "row", "extra": 1})", ids), InvalidArgument);
}

TEST_CASE("run config JSON") {
    const auto rc = parse_run_config_json(R"({"outer_max_iter": 12, "seed": 3, "phi_update": "printed",
        "ascent_rel_tol": 1e-9, "mode": "column", "partition": "p.json"})");
    CHECK(rc.fit.outer_max_iter == 12);
    CHECK(rc.fit.seed == 3);
    CHECK(rc.fit.phi_update == PhiUpdateForm::Printed);
    CHECK(rc.fit.ascent.rel_tol == 1e-9);
    CHECK(rc.mode == RunMode::Column);
    CHECK_NOTHROW(rc.validate());

    auto no_partition = rc;
    no_partition.partition_path.clear();
    CHECK_THROWS_AS(no_partition.validate(), InvalidArgument);
    CHECK_THROWS_AS(parse_run_config_json(R"({"outer_iters": 3})"), InvalidArgument);
    CHECK_THROWS_AS(parse_run_config_json(R"({"seed": "x"})"), InvalidArgument);
    CHECK_THROWS_AS(parse_run_config_json(R"({"mode": "mesh"})"), InvalidArgument);
}
