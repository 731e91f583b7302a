#pragma once

#include <cstddef>
#include <string>
#include <vector>

#include "consensus_vem/distributed/message.hpp"
#include "consensus_vem/distributed/partition.hpp"
#include "consensus_vem/model.hpp"

namespace cvem::dist {

struct Violation {
    std::size_t message_index = 0;
    std::string rule;  // "raw-label", "single-column-vote" or "beta-through-server"
    std::string description;
};

/// Structural privacy checks over a complete log:
///  raw-label: no per-object payload carries label values of a single column
///    (other than as part of a vote count);
///  single-column-vote: every VoteCounts payload sums at least two classifier
///    columns;
///  beta-through-server: in column and arbitrary mode no beta quantity is sent
///    to or from the server.
std::vector<Violation> audit_privacy(const MessageLog& log, const PartitionSpec& spec);

enum class FaultKind { RawLabelLeak, SingleColumnVote, BetaThroughServer };

/// Copy of `clean` with one offending message appended, built from `w`.
MessageLog inject_fault(const MessageLog& clean, FaultKind fault, const LabelObservations& w);

}  // namespace cvem::dist
