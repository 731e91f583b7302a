#include "consensus_vem/io/labels_csv.hpp"

#include <algorithm>
#include <charconv>
#include <fstream>
#include <istream>
#include <ostream>
#include <set>
#include <sstream>

#include "consensus_vem/errors.hpp"

namespace cvem::io {

namespace {

std::string trim(const std::string& s) {
    const auto b = s.find_first_not_of(" \t\r");
    if (b == std::string::npos) return "";
    const auto e = s.find_last_not_of(" \t\r");
    return s.substr(b, e - b + 1);
}

std::vector<std::string> split(const std::string& line, char sep = ',') {
    std::vector<std::string> out;
    std::string cell;
    std::istringstream ss(line);
    while (std::getline(ss, cell, sep)) out.push_back(trim(cell));
    if (!line.empty() && line.back() == sep) out.emplace_back();
    return out;
}

std::int64_t parse_int(const std::string& cell, std::size_t line, const std::string& what) {
    std::int64_t v = 0;
    const char* end = cell.data() + cell.size();
    auto [ptr, ec] = std::from_chars(cell.data(), end, v);
    if (cell.empty() || ec != std::errc() || ptr != end) {
        throw ParseError(what + " '" + cell + "' is not an integer", line);
    }
    return v;
}

}  // namespace

std::vector<std::int64_t> default_object_ids(std::size_t n) {
    std::vector<std::int64_t> ids(n);
    for (std::size_t i = 0; i < n; ++i) ids[i] = static_cast<std::int64_t>(i + 1);
    return ids;
}

LabelsFile parse_labels_csv(std::istream& in) {
    std::string raw;
    std::size_t line_no = 0;
    std::int64_t k_override = 0;
    std::vector<std::int64_t> km_override;
    bool have_km = false;

    std::vector<std::string> header;
    std::size_t header_line = 0;
    while (std::getline(in, raw)) {
        ++line_no;
        const std::string line = trim(raw);
        if (line.empty()) continue;
        if (line[0] == '#') {
            const std::string body = trim(line.substr(1));
            if (body.rfind("k=", 0) == 0) {
                k_override = parse_int(trim(body.substr(2)), line_no, "k");
                if (k_override < 2) throw ParseError("k must be at least 2", line_no);
            } else if (body.rfind("km=", 0) == 0) {
                have_km = true;
                for (const std::string& c : split(body.substr(3))) {
                    const std::int64_t v = parse_int(c, line_no, "km entry");
                    if (v < 1) throw ParseError("km entries must be positive", line_no);
                    km_override.push_back(v);
                }
            }
            continue;
        }
        header = split(line);
        header_line = line_no;
        break;
    }
    if (header.empty()) throw ParseError("missing header row", line_no + 1);
    if (header[0] != "object_id") throw ParseError("first column must be object_id", header_line);

    std::size_t r1 = 0;
    std::size_t r2 = 0;
    for (std::size_t c = 1; c < header.size(); ++c) {
        const std::string& name = header[c];
        const std::string expect_clf = "clf_" + std::to_string(r1 + 1);
        const std::string expect_clu = "clu_" + std::to_string(r2 + 1);
        if (r2 == 0 && name == expect_clf) {
            ++r1;
        } else if (name == expect_clu) {
            ++r2;
        } else {
            throw ParseError("unexpected column '" + name + "' (expected " +
                                 (r2 == 0 ? expect_clf + " or " : std::string()) + expect_clu + ")",
                             header_line);
        }
    }
    if (r1 + r2 == 0) throw ParseError("no label columns", header_line);
    if (have_km && km_override.size() != r2) {
        throw ParseError("km lists " + std::to_string(km_override.size()) + " counts for " +
                             std::to_string(r2) + " clusterings",
                         header_line);
    }

    std::vector<std::int64_t> ids;
    std::vector<std::vector<std::int64_t>> rows;
    std::vector<std::size_t> row_lines;
    std::set<std::int64_t> seen;
    while (std::getline(in, raw)) {
        ++line_no;
        const std::string line = trim(raw);
        if (line.empty() || line[0] == '#') continue;
        const std::vector<std::string> cells = split(line);
        if (cells.size() != header.size()) {
            throw ParseError("expected " + std::to_string(header.size()) + " cells, found " +
                                 std::to_string(cells.size()),
                             line_no);
        }
        const std::int64_t id = parse_int(cells[0], line_no, "object_id");
        if (!seen.insert(id).second) throw ParseError("duplicate object_id " + cells[0], line_no);
        std::vector<std::int64_t> row;
        for (std::size_t c = 1; c < cells.size(); ++c) {
            const std::int64_t v = parse_int(cells[c], line_no, header[c]);
            if (v < 1) throw ParseError(header[c] + " label " + cells[c] + " is below 1", line_no);
            if (c <= r1 && k_override > 0 && v > k_override) {
                throw ParseError(header[c] + " label " + cells[c] + " exceeds k=" + std::to_string(k_override), line_no);
            }
            if (c > r1 && have_km && v > km_override[c - 1 - r1]) {
                throw ParseError(header[c] + " label " + cells[c] + " exceeds its cluster count", line_no);
            }
            row.push_back(v);
        }
        ids.push_back(id);
        rows.push_back(std::move(row));
        row_lines.push_back(line_no);
    }
    if (rows.empty()) throw ParseError("no data rows", line_no);

    LabelsFile f;
    const std::size_t n = rows.size();
    std::int64_t k = k_override;
    if (k == 0) {
        for (const auto& row : rows) {
            for (std::size_t c = 0; c < r1; ++c) k = std::max(k, row[c]);
        }
        if (k < 2) k = 2;
    }
    f.shape.n_objects = n;
    f.shape.n_classes = static_cast<std::size_t>(k);
    f.shape.n_classifiers = r1;
    f.shape.n_clusterings = r2;
    f.shape.clusters_per_clustering.assign(r2, 0);
    for (std::size_t m = 0; m < r2; ++m) {
        std::int64_t km = have_km ? km_override[m] : 0;
        if (!have_km) {
            for (const auto& row : rows) km = std::max(km, row[r1 + m]);
        }
        f.shape.clusters_per_clustering[m] = static_cast<std::size_t>(km);
    }
    f.w.class_labels = LabelMatrix(n, r1);
    f.w.cluster_labels = LabelMatrix(n, r2);
    for (std::size_t i = 0; i < n; ++i) {
        for (std::size_t c = 0; c < r1; ++c) f.w.class_labels(i, c) = static_cast<int>(rows[i][c] - 1);
        for (std::size_t m = 0; m < r2; ++m) f.w.cluster_labels(i, m) = static_cast<int>(rows[i][r1 + m] - 1);
    }
    f.object_ids = std::move(ids);
    try {
        f.shape.validate();
        f.w.validate(f.shape);
    } catch (const InvalidArgument& e) {
        throw ParseError(e.what(), header_line);
    }
    return f;
}

LabelsFile read_labels_csv(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw InvalidArgument("cannot open " + path);
    return parse_labels_csv(in);
}

void write_labels_csv(std::ostream& out, const LabelsFile& file) {
    const ProblemShape& s = file.shape;
    const std::vector<std::int64_t> ids =
        file.object_ids.empty() ? default_object_ids(s.n_objects) : file.object_ids;
    out << "# k=" << s.n_classes << '\n';
    if (s.n_clusterings > 0) {
        out << "# km=";
        for (std::size_t m = 0; m < s.n_clusterings; ++m) {
            out << (m ? "," : "") << s.clusters_per_clustering[m];
        }
        out << '\n';
    }
    out << "object_id";
    for (std::size_t l = 0; l < s.n_classifiers; ++l) out << ",clf_" << l + 1;
    for (std::size_t m = 0; m < s.n_clusterings; ++m) out << ",clu_" << m + 1;
    out << '\n';
    for (std::size_t n = 0; n < s.n_objects; ++n) {
        out << ids[n];
        for (std::size_t l = 0; l < s.n_classifiers; ++l) out << ',' << file.w.class_labels(n, l) + 1;
        for (std::size_t m = 0; m < s.n_clusterings; ++m) out << ',' << file.w.cluster_labels(n, m) + 1;
        out << '\n';
    }
}

void write_labels_csv(const std::string& path, const LabelsFile& file) {
    std::ofstream out(path);
    if (!out) throw InvalidArgument("cannot write " + path);
    write_labels_csv(out, file);
    if (!out) throw InvalidArgument("error writing " + path);
}

}  // namespace cvem::io
