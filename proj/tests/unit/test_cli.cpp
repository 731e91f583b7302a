#include <doctest.h>

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <sys/wait.h>

#include "consensus_vem/baselines/experiment.hpp"
#include "consensus_vem/distributed/partition.hpp"
#include "consensus_vem/io/json_io.hpp"
#include "consensus_vem/io/labels_csv.hpp"
#include "consensus_vem/io/posteriors_csv.hpp"
#include "fixtures.hpp"

namespace fs = std::filesystem;

namespace {

struct Run {
    int code = -1;
    std::string output;
};

Run cvem_run(const std::string& args) {
    const std::string cmd = std::string(CVEM_BINARY) + " " + args + " 2>&1";
    Run r;
    FILE* pipe = popen(cmd.c_str(), "r");
    REQUIRE(pipe != nullptr);
    char buf[4096];
    while (std::size_t got = fread(buf, 1, sizeof buf, pipe)) r.output.append(buf, got);
    const int status = pclose(pipe);
    r.code = WIFEXITED(status) ? WEXITSTATUS(status) : -1;
    return r;
}

std::string slurp(const fs::path& p) {
    std::ifstream in(p, std::ios::binary);
    std::ostringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

struct Workdir {
    fs::path dir;
    Workdir() {
        dir = fs::temp_directory_path() / ("cvem_cli_" + std::to_string(::getpid()));
        fs::create_directories(dir);
        const auto s = fixtures::make_shape(1, 3, 4, 3, 3);
        std::ofstream(dir / "model.json") << cvem::io::model_to_json(fixtures::recovery_params(s));
    }
    ~Workdir() { fs::remove_all(dir); }
    std::string operator/(const std::string& name) const { return (dir / name).string(); }
};

}  // namespace

TEST_CASE("sample, fit and eval end to end") {
    Workdir wd;
    REQUIRE(cvem_run("sample -m " + (wd / "model.json") + " -n 200 --classifiers 4 --seed 7 -o " +
                     (wd / "labels.csv") + " --truth " + (wd / "truth.csv"))
                .code == 0);
    const auto fitted = cvem_run("fit -i " + (wd / "labels.csv") + " -o " + (wd / "post.csv") + " --trace " +
                                 (wd / "trace.csv"));
    REQUIRE(fitted.code == 0);
    const auto ev = cvem_run("eval -p " + (wd / "post.csv") + " -t " + (wd / "truth.csv"));
    REQUIRE(ev.code == 0);
    double acc = 0.0;
    REQUIRE(std::sscanf(ev.output.c_str(), "accuracy %lf", &acc) == 1);

    // the claim of the in-library fit on the same draw: beats the vote
    const auto labels = cvem::io::read_labels_csv(wd / "labels.csv");
    const auto truth = cvem::io::read_truth_csv(wd / "truth.csv");
    const auto vote = cvem::baselines::majority_vote(labels.w, labels.shape.n_classes);
    CHECK(acc >= cvem::baselines::accuracy(vote, truth.labels));
    CHECK(slurp(wd / "trace.csv").rfind("iteration,elbo\n", 0) == 0);

    // identical inputs give byte-identical outputs
    REQUIRE(cvem_run("fit -i " + (wd / "labels.csv") + " -o " + (wd / "post2.csv")).code == 0);
    CHECK(slurp(wd / "post.csv") == slurp(wd / "post2.csv"));
    REQUIRE(cvem_run("sample -m " + (wd / "model.json") + " -n 200 --classifiers 4 --seed 7 -o " +
                     (wd / "labels2.csv"))
                .code == 0);
    CHECK(slurp(wd / "labels.csv") == slurp(wd / "labels2.csv"));
}

TEST_CASE("simulate in row mode audits clean and matches fit") {
    Workdir wd;
    REQUIRE(cvem_run("sample -m " + (wd / "model.json") + " -n 100 --classifiers 4 --seed 3 -o " +
                     (wd / "labels.csv"))
                .code == 0);
    const auto labels = cvem::io::read_labels_csv(wd / "labels.csv");
    std::ofstream(wd / "part.json") << cvem::io::partition_to_json(cvem::dist::row_partition(100, 2), labels.object_ids);
    const auto sim = cvem_run("simulate --mode row -i " + (wd / "labels.csv") + " -p " + (wd / "part.json") +
                              " -o " + (wd / "dist.csv") + " --log " + (wd / "log.jsonl") + " --audit " +
                              (wd / "audit.json"));
    REQUIRE(sim.code == 0);
    const std::string audit = slurp(wd / "audit.json");
    CHECK(audit.find("\"violations\": []") != std::string::npos);
    CHECK(fs::file_size(wd / "log.jsonl") > 0);
    REQUIRE(cvem_run("fit -i " + (wd / "labels.csv") + " -o " + (wd / "central.csv")).code == 0);
    CHECK(slurp(wd / "dist.csv") == slurp(wd / "central.csv"));
}

TEST_CASE("exit codes") {
    Workdir wd;
    const auto unknown = cvem_run("fit --no-such-flag");
    CHECK(unknown.code == 1);
    CHECK(unknown.output.find("Usage") != std::string::npos);
    CHECK(cvem_run("").code == 1);
    CHECK(cvem_run("--help").code == 0);

    std::ofstream(wd / "bad.csv") << "object_id,clf_1,clu_1\n1,1,1\n2,2,0\n";
    const auto bad = cvem_run("fit -i " + (wd / "bad.csv") + " -o " + (wd / "out.csv"));
    CHECK(bad.code == 2);
    CHECK(bad.output.find("line 3") != std::string::npos);
    CHECK(cvem_run("fit -i " + (wd / "missing.csv") + " -o " + (wd / "out.csv")).code == 2);
    CHECK(cvem_run("simulate --mode row -i " + (wd / "bad.csv")).code == 2);

    // the printed objective form diverges on ordinary data
    std::ofstream(wd / "m2.json") << R"({"mu":[0,0],"sigma2":[4,4],"delta2":0.1,"beta":[[[0.9,0.1],[0.1,0.9]]]})";
    std::ofstream(wd / "printed.json") << R"({"objective_form": "printed", "outer_max_iter": 30})";
    REQUIRE(cvem_run("sample -m " + (wd / "m2.json") + " -n 300 --classifiers 3 --seed 1 -o " + (wd / "l2.csv")).code == 0);
    const auto diverged = cvem_run("fit -i " + (wd / "l2.csv") + " -c " + (wd / "printed.json") + " -o " + (wd / "p2.csv"));
    CHECK(diverged.code == 3);
}

TEST_CASE("bench writes the accuracy table") {
    Workdir wd;
    const auto r = cvem_run("bench --dataset moons -n 200 --trials 2 --pct-labeled 5 --max-iter 3 -o " + (wd / "acc.csv"));
    REQUIRE(r.code == 0);
    const std::string csv = slurp(wd / "acc.csv");
    CHECK(csv.rfind("trial,method,accuracy\n", 0) == 0);
    std::size_t lines = 0;
    for (char c : csv) lines += c == '\n';
    CHECK(lines == 5);
}
