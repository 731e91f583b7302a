#pragma once

#include <cstddef>
#include <cstdint>
#include <iosfwd>
#include <string>
#include <vector>

#include "consensus_vem/distributed/partition.hpp"
#include "consensus_vem/exact_sum.hpp"

namespace cvem::dist {

enum class MessageKind {
    PartialSumBeta,
    PartialSumMu,
    PartialSumDelta2,
    PartialSumSigma2Stat,
    PartialSumElbo,
    VoteCounts,
    PhiClassMass,
    ClusterElbo,
    SharedVariationalRead,
    SharedVariationalWrite,
    ModelBroadcast,
};

enum class Phase { Setup = 0, EStep = 1, MStep = 2, Bound = 3 };

std::string to_string(MessageKind kind);
std::string to_string(Phase phase);

struct Payload {
    std::string quantity;
    std::vector<std::size_t> shape;
    std::vector<double> values;
    /// Exact partial sums backing `values` for the partial-sum kinds.
    std::vector<ExactSum> exact;
    /// Object ids indexing the leading dimension, for per-object payloads.
    std::vector<std::size_t> objects;
    /// Base columns the payload was computed from.
    std::vector<ColumnRef> columns;
    /// True when the values are functions of the labels alone (counts or
    /// raw labels), as opposed to mixed with variational quantities.
    bool label_valued = false;

    bool per_object() const { return !objects.empty(); }
};

struct Message {
    std::size_t outer_iter = 0;
    Phase phase = Phase::Setup;
    std::size_t round = 0;
    std::string from;
    std::string to;
    MessageKind kind = MessageKind::ModelBroadcast;
    Payload payload;
};

/// FNV-1a over the payload's numeric content.
std::uint64_t payload_checksum(const Payload& payload);

class MessageLog {
public:
    void append(Message message) { messages_.push_back(std::move(message)); }
    /// Stable sort by (outer_iter, phase, round, from, to).
    void finalize();

    const std::vector<Message>& messages() const noexcept { return messages_; }
    std::size_t size() const noexcept { return messages_.size(); }
    std::size_t count(MessageKind kind) const;
    std::size_t count_in_iteration(std::size_t outer_iter) const;

    /// One JSON object per line: outer_iter, phase, round, from, to, kind,
    /// payload_shape, payload_checksum (+ payload when include_payload).
    void write_jsonl(std::ostream& out, bool include_payload = false) const;

private:
    std::vector<Message> messages_;
};

}  // namespace cvem::dist
