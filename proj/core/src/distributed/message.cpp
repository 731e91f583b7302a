#include "consensus_vem/distributed/message.hpp"

#include <algorithm>
#include <cstring>
#include <ostream>
#include <tuple>

#include "json.hpp"

namespace cvem::dist {

namespace {

constexpr std::uint64_t kFnvOffset = 0xcbf29ce484222325ULL;
constexpr std::uint64_t kFnvPrime = 0x100000001b3ULL;

void mix_bytes(std::uint64_t& h, const void* data, std::size_t len) {
    const auto* p = static_cast<const unsigned char*>(data);
    for (std::size_t i = 0; i < len; ++i) {
        h ^= p[i];
        h *= kFnvPrime;
    }
}

template <typename T>
void mix(std::uint64_t& h, const T& value) {
    mix_bytes(h, &value, sizeof(T));
}

std::string hex64(std::uint64_t v) {
    static const char* digits = "0123456789abcdef";
    std::string out(16, '0');
    for (int i = 15; i >= 0; --i) {
        out[static_cast<std::size_t>(i)] = digits[v & 0xF];
        v >>= 4;
    }
    return out;
}

}  // namespace

std::string to_string(MessageKind kind) {
    switch (kind) {
        case MessageKind::PartialSumBeta: return "PartialSumBeta";
        case MessageKind::PartialSumMu: return "PartialSumMu";
        case MessageKind::PartialSumDelta2: return "PartialSumDelta2";
        case MessageKind::PartialSumSigma2Stat: return "PartialSumSigma2Stat";
        case MessageKind::PartialSumElbo: return "PartialSumElbo";
        case MessageKind::VoteCounts: return "VoteCounts";
        case MessageKind::PhiClassMass: return "PhiClassMass";
        case MessageKind::ClusterElbo: return "ClusterElbo";
        case MessageKind::SharedVariationalRead: return "SharedVariationalRead";
        case MessageKind::SharedVariationalWrite: return "SharedVariationalWrite";
        case MessageKind::ModelBroadcast: return "ModelBroadcast";
    }
    return "?";
}

std::string to_string(Phase phase) {
    switch (phase) {
        case Phase::Setup: return "setup";
        case Phase::EStep: return "estep";
        case Phase::MStep: return "mstep";
        case Phase::Bound: return "bound";
    }
    return "?";
}

std::uint64_t payload_checksum(const Payload& payload) {
    std::uint64_t h = kFnvOffset;
    mix_bytes(h, payload.quantity.data(), payload.quantity.size());
    for (std::size_t s : payload.shape) mix(h, static_cast<std::uint64_t>(s));
    for (double v : payload.values) mix(h, v);
    for (const ExactSum& e : payload.exact) {
        for (double c : e.components()) mix(h, c);
        mix(h, static_cast<std::uint64_t>(e.components().size()));
    }
    for (std::size_t n : payload.objects) mix(h, static_cast<std::uint64_t>(n));
    return h;
}

void MessageLog::finalize() {
    std::stable_sort(messages_.begin(), messages_.end(), [](const Message& a, const Message& b) {
        return std::tie(a.outer_iter, a.phase, a.round, a.from, a.to) <
               std::tie(b.outer_iter, b.phase, b.round, b.from, b.to);
    });
}

std::size_t MessageLog::count(MessageKind kind) const {
    return static_cast<std::size_t>(std::count_if(messages_.begin(), messages_.end(),
                                                  [&](const Message& m) { return m.kind == kind; }));
}

std::size_t MessageLog::count_in_iteration(std::size_t outer_iter) const {
    return static_cast<std::size_t>(
        std::count_if(messages_.begin(), messages_.end(),
                      [&](const Message& m) { return m.outer_iter == outer_iter; }));
}

void MessageLog::write_jsonl(std::ostream& out, bool include_payload) const {
    for (const Message& m : messages_) {
        nlohmann::ordered_json rec;
        rec["outer_iter"] = m.outer_iter;
        rec["phase"] = to_string(m.phase);
        rec["round"] = m.round;
        rec["from"] = m.from;
        rec["to"] = m.to;
        rec["kind"] = to_string(m.kind);
        rec["payload_shape"] = m.payload.shape;
        rec["payload_checksum"] = hex64(payload_checksum(m.payload));
        if (include_payload) {
            nlohmann::ordered_json p;
            p["quantity"] = m.payload.quantity;
            p["values"] = m.payload.values;
            p["objects"] = m.payload.objects;
            std::vector<std::string> cols;
            for (const ColumnRef& c : m.payload.columns) cols.push_back(c.name());
            p["columns"] = cols;
            p["label_valued"] = m.payload.label_valued;
            rec["payload"] = std::move(p);
        }
        out << rec.dump() << '\n';
    }
}

}  // namespace cvem::dist
