#include "consensus_vem/io/json_io.hpp"

#include <fstream>
#include <map>
#include <sstream>

#include <json.hpp>

#include "consensus_vem/errors.hpp"

namespace cvem::io {

using nlohmann::json;
using nlohmann::ordered_json;

namespace {

json parse_json(const std::string& text) {
    try {
        return json::parse(text);
    } catch (const json::parse_error& e) {
        // byte offset is the best position nlohmann gives; turn it into a line
        std::size_t line = 1;
        for (std::size_t i = 0; i < e.byte && i < text.size(); ++i) line += text[i] == '\n';
        throw ParseError(e.what(), line);
    }
}

template <typename T>
T get(const json& j, const char* key) {
    try {
        return j.at(key).get<T>();
    } catch (const json::exception& e) {
        throw InvalidArgument(std::string("field '") + key + "': " + e.what());
    }
}

}  // namespace

ModelParams parse_model_json(const std::string& text) {
    const json j = parse_json(text);
    if (!j.is_object()) throw InvalidArgument("model JSON must be an object");
    ModelParams p;
    p.mu = get<std::vector<double>>(j, "mu");
    p.sigma2 = get<std::vector<double>>(j, "sigma2");
    p.delta2 = get<double>(j, "delta2");
    const auto beta = get<std::vector<std::vector<std::vector<double>>>>(j, "beta");
    for (const auto& bm : beta) {
        const std::size_t rows = bm.size();
        const std::size_t cols = rows ? bm[0].size() : 0;
        Matrix m(rows, cols);
        for (std::size_t r = 0; r < rows; ++r) {
            if (bm[r].size() != cols) throw InvalidArgument("beta rows differ in length");
            for (std::size_t c = 0; c < cols; ++c) m(r, c) = bm[r][c];
        }
        p.beta.push_back(std::move(m));
    }
    return p;
}

ModelParams read_model_json(const std::string& path) { return parse_model_json(read_text_file(path)); }

std::string model_to_json(const ModelParams& params) {
    ordered_json j;
    j["mu"] = params.mu;
    j["sigma2"] = params.sigma2;
    j["delta2"] = params.delta2;
    ordered_json beta = ordered_json::array();
    for (const Matrix& m : params.beta) {
        ordered_json rows = ordered_json::array();
        for (std::size_t r = 0; r < m.rows(); ++r) {
            const auto row = m.row(r);
            rows.push_back(std::vector<double>(row.begin(), row.end()));
        }
        beta.push_back(std::move(rows));
    }
    j["beta"] = std::move(beta);
    return j.dump(2) + "\n";
}

dist::PartitionSpec parse_partition_json(const std::string& text,
                                         const std::vector<std::int64_t>& object_ids) {
    const json j = parse_json(text);
    if (!j.is_object()) throw InvalidArgument("partition JSON must be an object");
    for (const auto& [key, _] : j.items()) {
        if (key != "mode" && key != "row_groups" && key != "column_groups" && key != "site_of") {
            throw InvalidArgument("unknown partition key '" + key + "'");
        }
    }
    std::map<std::int64_t, std::size_t> index_of;
    for (std::size_t n = 0; n < object_ids.size(); ++n) index_of[object_ids[n]] = n;

    dist::PartitionSpec spec;
    spec.mode = dist::parse_partition_mode(get<std::string>(j, "mode"));
    if (j.contains("row_groups")) {
        for (const auto& group : get<std::vector<std::vector<std::int64_t>>>(j, "row_groups")) {
            std::vector<std::size_t> rows;
            for (std::int64_t id : group) {
                const auto it = index_of.find(id);
                if (it == index_of.end()) {
                    throw InvalidArgument("row_groups names unknown object id " + std::to_string(id));
                }
                rows.push_back(it->second);
            }
            spec.row_groups.push_back(std::move(rows));
        }
    }
    if (j.contains("column_groups")) {
        for (const auto& group : get<std::vector<std::vector<std::string>>>(j, "column_groups")) {
            std::vector<dist::ColumnRef> cols;
            for (const std::string& name : group) cols.push_back(dist::ColumnRef::parse(name));
            spec.column_groups.push_back(std::move(cols));
        }
    }
    if (j.contains("site_of")) {
        for (const auto& [key, value] : get<std::map<std::string, std::string>>(j, "site_of")) {
            std::size_t r = 0;
            std::size_t c = 0;
            char comma = 0;
            std::istringstream ss(key);
            if (!(ss >> r >> comma >> c) || comma != ',' || r == 0 || c == 0 || !ss.eof()) {
                throw InvalidArgument("site_of key '" + key + "' must be \"<row group>,<column group>\"");
            }
            spec.site_of[{r - 1, c - 1}] = value;
        }
    }
    return spec;
}

dist::PartitionSpec read_partition_json(const std::string& path,
                                        const std::vector<std::int64_t>& object_ids) {
    return parse_partition_json(read_text_file(path), object_ids);
}

std::string partition_to_json(const dist::PartitionSpec& spec,
                              const std::vector<std::int64_t>& object_ids) {
    ordered_json j;
    j["mode"] = dist::to_string(spec.mode);
    ordered_json rows = ordered_json::array();
    for (const auto& group : spec.row_groups) {
        std::vector<std::int64_t> ids;
        for (std::size_t n : group) ids.push_back(object_ids.at(n));
        rows.push_back(ids);
    }
    j["row_groups"] = std::move(rows);
    ordered_json cols = ordered_json::array();
    for (const auto& group : spec.column_groups) {
        std::vector<std::string> names;
        for (const auto& c : group) names.push_back(c.name());
        cols.push_back(names);
    }
    j["column_groups"] = std::move(cols);
    ordered_json sites = ordered_json::object();
    for (const auto& [key, site] : spec.site_of) {
        sites[std::to_string(key.first + 1) + "," + std::to_string(key.second + 1)] = site;
    }
    j["site_of"] = std::move(sites);
    return j.dump(2) + "\n";
}

std::string to_string(RunMode mode) {
    switch (mode) {
        case RunMode::Central: return "central";
        case RunMode::Row: return "row";
        case RunMode::Column: return "column";
        case RunMode::Arbitrary: return "arbitrary";
    }
    return "?";
}

RunMode parse_run_mode(const std::string& text) {
    if (text == "central") return RunMode::Central;
    if (text == "row") return RunMode::Row;
    if (text == "column") return RunMode::Column;
    if (text == "arbitrary") return RunMode::Arbitrary;
    throw InvalidArgument("unknown mode '" + text + "' (central, row, column, arbitrary)");
}

void RunConfig::validate() const {
    fit.validate();
    if (mode != RunMode::Central && partition_path.empty()) {
        throw InvalidArgument("mode " + to_string(mode) + " needs a partition file");
    }
}

namespace {

PhiUpdateForm parse_phi_form(const std::string& s) {
    if (s == "elbo") return PhiUpdateForm::Elbo;
    if (s == "printed") return PhiUpdateForm::Printed;
    throw InvalidArgument("phi_update must be elbo or printed");
}

ObjectiveForm parse_objective_form(const std::string& s) {
    if (s == "elbo") return ObjectiveForm::Elbo;
    if (s == "printed") return ObjectiveForm::Printed;
    throw InvalidArgument("objective_form must be elbo or printed");
}

}  // namespace

RunConfig parse_run_config_json(const std::string& text) {
    const json j = parse_json(text);
    if (!j.is_object()) throw InvalidArgument("config JSON must be an object");
    RunConfig cfg;
    FitConfig& f = cfg.fit;
    for (const auto& [key, value] : j.items()) {
        try {
            if (key == "outer_max_iter") f.outer_max_iter = value.get<std::size_t>();
            else if (key == "outer_rel_tol") f.outer_rel_tol = value.get<double>();
            else if (key == "estep_max_sweeps") f.estep_max_sweeps = value.get<std::size_t>();
            else if (key == "estep_rel_tol") f.estep_rel_tol = value.get<double>();
            else if (key == "seed") f.seed = value.get<std::uint64_t>();
            else if (key == "phi_floor") f.phi_floor = value.get<double>();
            else if (key == "beta_floor") f.beta_floor = value.get<double>();
            else if (key == "phi_update") f.phi_update = parse_phi_form(value.get<std::string>());
            else if (key == "objective_form") f.objective_form = parse_objective_form(value.get<std::string>());
            else if (key == "ascent_rel_tol") f.ascent.rel_tol = value.get<double>();
            else if (key == "ascent_max_iter") f.ascent.max_iter = value.get<std::size_t>();
            else if (key == "threads") f.threads = value.get<std::size_t>();
            else if (key == "mode") cfg.mode = parse_run_mode(value.get<std::string>());
            else if (key == "partition") cfg.partition_path = value.get<std::string>();
            else if (key == "input") cfg.input_path = value.get<std::string>();
            else if (key == "output") cfg.output_path = value.get<std::string>();
            else throw InvalidArgument("unknown config key '" + key + "'");
        } catch (const json::exception& e) {
            throw InvalidArgument("config key '" + key + "': " + e.what());
        }
    }
    return cfg;
}

RunConfig read_run_config(const std::string& path) { return parse_run_config_json(read_text_file(path)); }

std::string read_text_file(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw InvalidArgument("cannot open " + path);
    std::ostringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

}  // namespace cvem::io
