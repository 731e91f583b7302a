// cvem: fit, sample, simulate, bench and eval from the command line.
//
// Exit codes: 0 ok, 1 usage, 2 data error, 3 numerical failure.

#include <cstdint>
#include <fstream>
#include <iostream>
#include <map>
#include <optional>
#include <string>

#include <CLI11.hpp>
#include <json.hpp>

#include "consensus_vem/baselines/experiment.hpp"
#include "consensus_vem/distributed/audit.hpp"
#include "consensus_vem/distributed/simulator.hpp"
#include "consensus_vem/errors.hpp"
#include "consensus_vem/inference.hpp"
#include "consensus_vem/io/json_io.hpp"
#include "consensus_vem/io/labels_csv.hpp"
#include "consensus_vem/io/posteriors_csv.hpp"
#include "consensus_vem/sampler.hpp"

namespace {

enum Exit { kOk = 0, kUsage = 1, kData = 2, kNumerical = 3 };

// Flags shared by fit and simulate; each overrides the config file when set.
struct FitFlags {
    std::string config;
    std::optional<std::uint64_t> seed;
    std::optional<std::size_t> max_iter;
    std::optional<std::size_t> threads;
    std::optional<std::string> phi_update;

    void add(CLI::App* cmd) {
        cmd->add_option("-c,--config", config, "run config JSON");
        cmd->add_option("--seed", seed, "master seed");
        cmd->add_option("--max-iter", max_iter, "outer iteration cap");
        cmd->add_option("--threads", threads, "worker threads (0 = auto)");
        cmd->add_option("--phi-update", phi_update, "elbo or printed")
            ->check(CLI::IsMember({"elbo", "printed"}));
    }

    cvem::io::RunConfig load() const {
        cvem::io::RunConfig rc = config.empty() ? cvem::io::RunConfig{} : cvem::io::read_run_config(config);
        if (seed) rc.fit.seed = *seed;
        if (max_iter) rc.fit.outer_max_iter = *max_iter;
        if (threads) rc.fit.threads = *threads;
        if (phi_update) {
            rc.fit.phi_update = *phi_update == "printed" ? cvem::PhiUpdateForm::Printed : cvem::PhiUpdateForm::Elbo;
        }
        return rc;
    }
};

std::string pick(const std::string& flag, const std::string& from_config, const char* what) {
    if (!flag.empty()) return flag;
    if (!from_config.empty()) return from_config;
    throw cvem::InvalidArgument(std::string("no ") + what + " given");
}

void report_fit(const cvem::FitResult& r) {
    std::cerr << "iterations " << r.posterior.n_outer_iterations << ", final bound "
              << r.posterior.final_elbo << ", delta2 " << r.params.delta2 << '\n';
}

int cmd_fit(const std::string& input, const std::string& output, const std::string& trace,
            const FitFlags& flags) {
    cvem::io::RunConfig rc = flags.load();
    rc.fit.validate();
    const auto labels = cvem::io::read_labels_csv(pick(input, rc.input_path, "input labels file"));
    const cvem::FitResult r = cvem::fit(labels.w, labels.shape, rc.fit);
    cvem::io::write_posteriors_csv(pick(output, rc.output_path, "output path"), r.posterior,
                                   labels.object_ids);
    if (!trace.empty()) cvem::io::write_trace_csv(trace, r.elbo_trace);
    report_fit(r);
    return kOk;
}

int cmd_sample(const std::string& model_path, std::size_t n, std::size_t r1, std::uint64_t seed,
               const std::string& labels_out, const std::string& truth_out) {
    const cvem::ModelParams params = cvem::io::read_model_json(model_path);
    cvem::ProblemShape shape;
    shape.n_objects = n;
    shape.n_classes = params.mu.size();
    shape.n_classifiers = r1;
    shape.n_clusterings = params.beta.size();
    for (const auto& b : params.beta) shape.clusters_per_clustering.push_back(b.cols());
    shape.validate();
    params.validate(shape);

    auto [w, truth] = cvem::sample_dataset(params, shape, seed);
    cvem::io::LabelsFile file{std::move(w), shape, cvem::io::default_object_ids(n)};
    cvem::io::write_labels_csv(labels_out, file);
    if (!truth_out.empty()) cvem::io::write_truth_csv(truth_out, truth, file.object_ids);
    return kOk;
}

int cmd_simulate(const std::string& input, const std::string& mode, const std::string& partition,
                 const std::string& output, const std::string& log_path, bool payloads,
                 const std::string& audit_path, const FitFlags& flags) {
    cvem::io::RunConfig rc = flags.load();
    if (!mode.empty()) rc.mode = cvem::io::parse_run_mode(mode);
    if (!partition.empty()) rc.partition_path = partition;
    if (rc.mode == cvem::io::RunMode::Central) {
        throw cvem::InvalidArgument("simulate needs --mode row, column or arbitrary");
    }
    rc.validate();

    const auto labels = cvem::io::read_labels_csv(pick(input, rc.input_path, "input labels file"));
    cvem::dist::PartitionSpec spec = cvem::io::read_partition_json(rc.partition_path, labels.object_ids);
    if (cvem::io::to_string(rc.mode) != cvem::dist::to_string(spec.mode)) {
        throw cvem::InvalidArgument("partition file is for mode " + cvem::dist::to_string(spec.mode));
    }
    const auto r = cvem::dist::run_distributed(labels.w, labels.shape, rc.fit, spec);
    cvem::io::write_posteriors_csv(pick(output, rc.output_path, "output path"), r.fit.posterior,
                                   labels.object_ids);
    if (!log_path.empty()) {
        std::ofstream out(log_path);
        if (!out) throw cvem::InvalidArgument("cannot write " + log_path);
        r.log.write_jsonl(out, payloads);
    }

    const auto violations = cvem::dist::audit_privacy(r.log, spec.normalized(labels.shape));
    nlohmann::ordered_json audit;
    audit["mode"] = cvem::dist::to_string(spec.mode);
    audit["messages"] = r.log.size();
    audit["violations"] = nlohmann::ordered_json::array();
    for (const auto& v : violations) {
        audit["violations"].push_back(
            {{"message_index", v.message_index}, {"rule", v.rule}, {"description", v.description}});
    }
    if (audit_path.empty()) {
        std::cout << audit.dump(2) << '\n';
    } else {
        std::ofstream out(audit_path);
        if (!out) throw cvem::InvalidArgument("cannot write " + audit_path);
        out << audit.dump(2) << '\n';
    }
    report_fit(r.fit);
    std::cerr << r.log.size() << " messages, " << violations.size() << " audit violations\n";
    return kOk;
}

int cmd_bench(const std::string& dataset, std::size_t n, double noise, double pct, std::size_t trials,
              std::uint64_t seed, std::size_t max_iter, std::size_t threads, const std::string& output) {
    const cvem::baselines::Dataset2D data = dataset == "moons"
                                                ? cvem::baselines::make_half_moons(n, noise, seed)
                                                : cvem::baselines::make_circles(n, noise, seed);
    cvem::baselines::ExperimentConfig cfg;
    cfg.seed = seed;
    cfg.fit.outer_max_iter = max_iter;
    cfg.threads = threads;
    const auto result = cvem::baselines::run_semi_supervised_experiment(data, pct, trials, cfg);
    if (output.empty()) {
        result.write_csv(std::cout);
    } else {
        std::ofstream out(output);
        if (!out) throw cvem::InvalidArgument("cannot write " + output);
        result.write_csv(out);
    }
    std::cerr << dataset << ": mean vote " << result.mean_vote() << ", mean bc3e " << result.mean_bc3e()
              << '\n';
    return kOk;
}

int cmd_eval(const std::string& posteriors_path, const std::string& truth_path) {
    const auto post = cvem::io::read_posteriors_csv(posteriors_path);
    const auto truth = cvem::io::read_truth_csv(truth_path);
    std::map<std::int64_t, int> label_of;
    for (std::size_t i = 0; i < truth.object_ids.size(); ++i) label_of[truth.object_ids[i]] = truth.labels[i];
    std::size_t hits = 0;
    for (std::size_t i = 0; i < post.object_ids.size(); ++i) {
        const auto it = label_of.find(post.object_ids[i]);
        if (it == label_of.end()) {
            throw cvem::InvalidArgument("object " + std::to_string(post.object_ids[i]) + " has no truth row");
        }
        hits += it->second == post.hard_labels[i];
    }
    if (post.object_ids.empty()) throw cvem::InvalidArgument("no posterior rows");
    std::cout << "accuracy " << static_cast<double>(hits) / static_cast<double>(post.object_ids.size())
              << " (" << hits << "/" << post.object_ids.size() << ")\n";
    return kOk;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Fuses classifier and cluster ensemble outputs by variational EM"};
    app.require_subcommand(1);

    FitFlags fit_flags;
    std::string fit_input, fit_output, fit_trace;
    auto* fit = app.add_subcommand("fit", "labels CSV -> posteriors CSV and bound trace");
    fit->add_option("-i,--input", fit_input, "labels CSV");
    fit->add_option("-o,--output", fit_output, "posteriors CSV");
    fit->add_option("--trace", fit_trace, "bound trace CSV");
    fit_flags.add(fit);

    std::string model_path, labels_out, truth_out;
    std::size_t n_objects = 0, n_classifiers = 0;
    std::uint64_t sample_seed = 0;
    auto* sample = app.add_subcommand("sample", "model JSON -> sampled labels CSV and truth CSV");
    sample->add_option("-m,--model", model_path, "model JSON")->required();
    sample->add_option("-n,--objects", n_objects, "number of objects")->required();
    sample->add_option("--classifiers", n_classifiers, "number of classifiers")->required();
    sample->add_option("--seed", sample_seed, "sampler seed");
    sample->add_option("-o,--labels", labels_out, "labels CSV")->required();
    sample->add_option("--truth", truth_out, "truth CSV");

    FitFlags sim_flags;
    std::string sim_input, sim_mode, sim_partition, sim_output, sim_log, sim_audit;
    bool sim_payloads = false;
    auto* simulate = app.add_subcommand("simulate", "distributed fit with message log and privacy audit");
    simulate->add_option("-i,--input", sim_input, "labels CSV");
    simulate->add_option("--mode", sim_mode, "row, column or arbitrary")
        ->check(CLI::IsMember({"row", "column", "arbitrary"}));
    simulate->add_option("-p,--partition", sim_partition, "partition JSON");
    simulate->add_option("-o,--output", sim_output, "posteriors CSV");
    simulate->add_option("--log", sim_log, "message log JSONL");
    simulate->add_flag("--payloads", sim_payloads, "include payload values in the log");
    simulate->add_option("--audit", sim_audit, "audit report JSON (default stdout)");
    sim_flags.add(simulate);

    std::string dataset = "moons", bench_output;
    std::size_t bench_n = 0, trials = 20, bench_iter = 10, bench_threads = 0;
    double noise = 0.15, pct = 2.0;
    std::uint64_t bench_seed = 1;
    auto* bench = app.add_subcommand("bench", "semi-supervised experiment -> accuracy CSV");
    bench->add_option("--dataset", dataset, "moons or circles")->check(CLI::IsMember({"moons", "circles"}));
    bench->add_option("-n,--points", bench_n, "points (default 800 moons, 1600 circles)");
    bench->add_option("--noise", noise, "gaussian noise sd");
    bench->add_option("--pct-labeled", pct, "percent of points labelled");
    bench->add_option("--trials", trials, "number of trials");
    bench->add_option("--seed", bench_seed, "master seed");
    bench->add_option("--max-iter", bench_iter, "outer iteration cap");
    bench->add_option("--threads", bench_threads, "concurrent trials (0 = auto)");
    bench->add_option("-o,--output", bench_output, "accuracy CSV (default stdout)");

    std::string eval_post, eval_truth;
    auto* eval = app.add_subcommand("eval", "posteriors CSV + truth CSV -> accuracy");
    eval->add_option("-p,--posteriors", eval_post, "posteriors CSV")->required();
    eval->add_option("-t,--truth", eval_truth, "truth CSV")->required();

    try {
        app.parse(argc, argv);
    } catch (const CLI::Success& e) {
        return app.exit(e);
    } catch (const CLI::ParseError& e) {
        app.exit(e);
        std::cerr << app.help();
        return kUsage;
    }

    try {
        if (*fit) return cmd_fit(fit_input, fit_output, fit_trace, fit_flags);
        if (*sample) return cmd_sample(model_path, n_objects, n_classifiers, sample_seed, labels_out, truth_out);
        if (*simulate) {
            return cmd_simulate(sim_input, sim_mode, sim_partition, sim_output, sim_log, sim_payloads,
                                sim_audit, sim_flags);
        }
        if (*bench) {
            if (bench_n == 0) bench_n = dataset == "moons" ? 800 : 1600;
            return cmd_bench(dataset, bench_n, noise, pct, trials, bench_seed, bench_iter, bench_threads,
                             bench_output);
        }
        if (*eval) return cmd_eval(eval_post, eval_truth);
    } catch (const cvem::NumericalFailure& e) {
        std::cerr << "numerical failure: " << e.what() << '\n';
        return kNumerical;
    } catch (const cvem::dist::SimulationIntegrityError& e) {
        std::cerr << "simulation integrity error: " << e.what() << '\n';
        return kNumerical;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << '\n';
        return kData;
    }
    return kUsage;
}
