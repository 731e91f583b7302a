#include "consensus_vem/distributed/audit.hpp"

#include <algorithm>
#include <cmath>

#include "consensus_vem/distributed/plan.hpp"

namespace cvem::dist {

namespace {

using Kind = ColumnRef::Kind;

bool all_integral(const std::vector<double>& values) {
    return !values.empty() &&
           std::all_of(values.begin(), values.end(), [](double v) { return v == std::floor(v); });
}

bool is_beta_quantity(const Message& m) {
    return m.kind == MessageKind::PartialSumBeta || m.payload.quantity == "beta" ||
           m.payload.quantity == "beta_counts";
}

std::string describe(const Message& m) {
    return to_string(m.kind) + " " + m.from + " -> " + m.to + " (iter " +
           std::to_string(m.outer_iter) + ", " + to_string(m.phase) + ", round " +
           std::to_string(m.round) + ")";
}

}  // namespace

std::vector<Violation> audit_privacy(const MessageLog& log, const PartitionSpec& spec) {
    std::vector<Violation> out;
    const auto& messages = log.messages();
    for (std::size_t idx = 0; idx < messages.size(); ++idx) {
        const Message& m = messages[idx];
        const Payload& p = m.payload;
        if (m.kind == MessageKind::VoteCounts) {
            const auto clf = std::count_if(p.columns.begin(), p.columns.end(),
                                           [](const ColumnRef& c) { return c.kind == Kind::Classifier; });
            if (clf < 2) {
                out.push_back({idx, "single-column-vote",
                               describe(m) + " sums " + std::to_string(clf) + " classifier column(s)"});
            }
        } else if (p.per_object() && p.columns.size() == 1 &&
                   (p.label_valued || all_integral(p.values))) {
            out.push_back({idx, "raw-label",
                           describe(m) + " carries per-object values of column " + p.columns[0].name()});
        }
        if (spec.mode != PartitionMode::Row && is_beta_quantity(m) &&
            (m.from == kServerId || m.to == kServerId)) {
            out.push_back({idx, "beta-through-server", describe(m) + " moves beta via the server"});
        }
    }
    return out;
}

MessageLog inject_fault(const MessageLog& clean, FaultKind fault, const LabelObservations& w) {
    MessageLog log = clean;
    Message m;
    m.outer_iter = 1;
    m.phase = Phase::EStep;
    m.from = "C1";
    switch (fault) {
        case FaultKind::RawLabelLeak: {
            m.to = kServerId;
            m.kind = MessageKind::PhiClassMass;
            m.payload.quantity = "cluster_label";
            m.payload.shape = {w.cluster_labels.rows()};
            for (std::size_t n = 0; n < w.cluster_labels.rows(); ++n) {
                m.payload.values.push_back(w.cluster_labels(n, 0) + 1.0);
                m.payload.objects.push_back(n);
            }
            m.payload.columns = {{Kind::Clusterer, 0}};
            m.payload.label_valued = true;
            break;
        }
        case FaultKind::SingleColumnVote: {
            m.to = kServerId;
            m.phase = Phase::Setup;
            m.outer_iter = 0;
            m.kind = MessageKind::VoteCounts;
            m.payload.quantity = "vote_counts";
            m.payload.shape = {w.class_labels.rows(), 1};
            for (std::size_t n = 0; n < w.class_labels.rows(); ++n) {
                m.payload.values.push_back(w.class_labels(n, 0) + 1.0);
                m.payload.objects.push_back(n);
            }
            m.payload.columns = {{Kind::Classifier, 0}};
            m.payload.label_valued = true;
            break;
        }
        case FaultKind::BetaThroughServer: {
            m.phase = Phase::MStep;
            m.to = kServerId;
            m.kind = MessageKind::PartialSumBeta;
            m.payload.quantity = "beta_counts";
            m.payload.shape = {1};
            m.payload.values = {1.0};
            m.payload.columns = {{Kind::Clusterer, 0}};
            break;
        }
    }
    log.append(std::move(m));
    log.finalize();
    return log;
}

}  // namespace cvem::dist
