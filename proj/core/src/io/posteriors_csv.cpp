#include "consensus_vem/io/posteriors_csv.hpp"

#include <algorithm>
#include <charconv>
#include <cstdio>
#include <fstream>
#include <istream>
#include <numeric>
#include <ostream>
#include <sstream>

#include "consensus_vem/errors.hpp"

namespace cvem::io {

namespace {

std::string fmt17(double v) {
    char buf[40];
    std::snprintf(buf, sizeof buf, "%.17g", v);
    return buf;
}

std::vector<std::size_t> order_by_id(const std::vector<std::int64_t>& ids) {
    std::vector<std::size_t> order(ids.size());
    std::iota(order.begin(), order.end(), std::size_t{0});
    std::stable_sort(order.begin(), order.end(),
                     [&](std::size_t a, std::size_t b) { return ids[a] < ids[b]; });
    return order;
}

std::vector<std::string> split(const std::string& line) {
    std::vector<std::string> out;
    std::string cell;
    std::istringstream ss(line);
    while (std::getline(ss, cell, ',')) {
        while (!cell.empty() && (cell.back() == '\r' || cell.back() == ' ')) cell.pop_back();
        while (!cell.empty() && cell.front() == ' ') cell.erase(cell.begin());
        out.push_back(cell);
    }
    if (!line.empty() && line.back() == ',') out.emplace_back();
    return out;
}

std::int64_t to_int(const std::string& s, std::size_t line) {
    std::int64_t v = 0;
    auto [p, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
    if (s.empty() || ec != std::errc() || p != s.data() + s.size()) {
        throw ParseError("'" + s + "' is not an integer", line);
    }
    return v;
}

double to_double(const std::string& s, std::size_t line) {
    double v = 0;
    auto [p, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
    if (s.empty() || ec != std::errc() || p != s.data() + s.size()) {
        throw ParseError("'" + s + "' is not a number", line);
    }
    return v;
}

// Reads the header and returns the data rows with their line numbers.
struct Rows {
    std::vector<std::string> header;
    std::vector<std::vector<std::string>> cells;
    std::vector<std::size_t> lines;
};

Rows read_rows(std::istream& in) {
    Rows rows;
    std::string raw;
    std::size_t line_no = 0;
    while (std::getline(in, raw)) {
        ++line_no;
        if (raw.empty() || raw == "\r" || raw[0] == '#') continue;
        auto cells = split(raw);
        if (rows.header.empty()) {
            rows.header = std::move(cells);
            continue;
        }
        if (cells.size() != rows.header.size()) {
            throw ParseError("expected " + std::to_string(rows.header.size()) + " cells, found " +
                                 std::to_string(cells.size()),
                             line_no);
        }
        rows.cells.push_back(std::move(cells));
        rows.lines.push_back(line_no);
    }
    if (rows.header.empty()) throw ParseError("missing header row", line_no + 1);
    return rows;
}

template <typename F>
void with_file(const std::string& path, F&& write) {
    std::ofstream out(path);
    if (!out) throw InvalidArgument("cannot write " + path);
    write(out);
    out.flush();
    if (!out) throw InvalidArgument("error writing " + path);
}

std::ifstream open_in(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw InvalidArgument("cannot open " + path);
    return in;
}

}  // namespace

void write_posteriors_csv(std::ostream& out, const PosteriorResult& result,
                          const std::vector<std::int64_t>& object_ids) {
    const Matrix& p = result.class_posteriors;
    if (object_ids.size() != p.rows() || result.hard_labels.size() != p.rows()) {
        throw InvalidArgument("posteriors and object ids differ in length");
    }
    out << "object_id";
    for (std::size_t c = 0; c < p.cols(); ++c) out << ",p_class_" << c + 1;
    out << ",hard_label\n";
    for (std::size_t n : order_by_id(object_ids)) {
        out << object_ids[n];
        for (std::size_t c = 0; c < p.cols(); ++c) out << ',' << fmt17(p(n, c));
        out << ',' << result.hard_labels[n] + 1 << '\n';
    }
}

void write_posteriors_csv(const std::string& path, const PosteriorResult& result,
                          const std::vector<std::int64_t>& object_ids) {
    with_file(path, [&](std::ostream& out) { write_posteriors_csv(out, result, object_ids); });
}

PosteriorsFile parse_posteriors_csv(std::istream& in) {
    const Rows rows = read_rows(in);
    const auto& h = rows.header;
    if (h.size() < 3 || h.front() != "object_id" || h.back() != "hard_label") {
        throw ParseError("header must be object_id,p_class_1..p_class_k,hard_label", 1);
    }
    const std::size_t k = h.size() - 2;
    PosteriorsFile f;
    f.class_posteriors = Matrix(rows.cells.size(), k);
    for (std::size_t n = 0; n < rows.cells.size(); ++n) {
        const auto& cells = rows.cells[n];
        const std::size_t line = rows.lines[n];
        f.object_ids.push_back(to_int(cells[0], line));
        for (std::size_t c = 0; c < k; ++c) f.class_posteriors(n, c) = to_double(cells[c + 1], line);
        const std::int64_t label = to_int(cells.back(), line);
        if (label < 1 || label > static_cast<std::int64_t>(k)) {
            throw ParseError("hard_label " + cells.back() + " out of range", line);
        }
        f.hard_labels.push_back(static_cast<int>(label - 1));
    }
    return f;
}

PosteriorsFile read_posteriors_csv(const std::string& path) {
    auto in = open_in(path);
    return parse_posteriors_csv(in);
}

void write_truth_csv(std::ostream& out, const LatentTruth& truth,
                     const std::vector<std::int64_t>& object_ids) {
    const std::size_t n_obj = truth.y.rows();
    const std::size_t k = truth.y.cols();
    const std::size_t r2 = truth.z.cols();
    if (object_ids.size() != n_obj) throw InvalidArgument("truth and object ids differ in length");
    out << "object_id,true_label";
    for (std::size_t c = 0; c < k; ++c) out << ",y_" << c + 1;
    for (std::size_t c = 0; c < k; ++c) out << ",theta_" << c + 1;
    for (std::size_t m = 0; m < r2; ++m) out << ",z_" << m + 1;
    out << '\n';
    for (std::size_t n : order_by_id(object_ids)) {
        out << object_ids[n] << ',' << argmax(truth.y.row(n)) + 1;
        for (std::size_t c = 0; c < k; ++c) out << ',' << fmt17(truth.y(n, c));
        for (std::size_t c = 0; c < k; ++c) out << ',' << fmt17(truth.theta(n, c));
        for (std::size_t m = 0; m < r2; ++m) out << ',' << truth.z(n, m) + 1;
        out << '\n';
    }
}

void write_truth_csv(const std::string& path, const LatentTruth& truth,
                     const std::vector<std::int64_t>& object_ids) {
    with_file(path, [&](std::ostream& out) { write_truth_csv(out, truth, object_ids); });
}

TruthFile parse_truth_csv(std::istream& in) {
    const Rows rows = read_rows(in);
    if (rows.header.size() < 2 || rows.header[0] != "object_id" || rows.header[1] != "true_label") {
        throw ParseError("header must start with object_id,true_label", 1);
    }
    TruthFile f;
    for (std::size_t n = 0; n < rows.cells.size(); ++n) {
        const std::size_t line = rows.lines[n];
        f.object_ids.push_back(to_int(rows.cells[n][0], line));
        const std::int64_t label = to_int(rows.cells[n][1], line);
        if (label < 1) throw ParseError("true_label must be at least 1", line);
        f.labels.push_back(static_cast<int>(label - 1));
    }
    return f;
}

TruthFile read_truth_csv(const std::string& path) {
    auto in = open_in(path);
    return parse_truth_csv(in);
}

void write_trace_csv(const std::string& path, const std::vector<double>& trace) {
    with_file(path, [&](std::ostream& out) {
        out << "iteration,elbo\n";
        for (std::size_t i = 0; i < trace.size(); ++i) out << i + 1 << ',' << fmt17(trace[i]) << '\n';
    });
}

}  // namespace cvem::io
