#include "divetrack/memory.hpp"

#include <sstream>
#include <string>
#include <utility>

#include "divetrack/core_ops.hpp"

namespace divetrack {

MemoryEntry::MemoryEntry(int frame_index, Embedding embedding, SoftMask mask, double confidence)
    : frame_index(frame_index),
      embedding(std::move(embedding)),
      mask(std::move(mask)),
      confidence(confidence) {
    if (!(confidence >= 0.0 && confidence <= 1.0)) {
        throw ContractViolation("memory entry confidence " + std::to_string(confidence) +
                                " outside [0,1]");
    }
}

void MemoryConfig::validate() const {
    if (delta < 1) throw ContractViolation("memory.delta must be >= 1");
    if (!(gamma_iou >= 0.0 && gamma_iou <= 1.0)) {
        throw ContractViolation("memory.gamma_iou must be in [0,1]");
    }
    if (n_long < 1) throw ContractViolation("memory.n_long must be >= 1");
    if (n_short < 1) throw ContractViolation("memory.n_short must be >= 1");
}

const MemoryEntry& select_diverse(const std::vector<MemoryEntry>& buffer,
                                  const MemoryEntry& latest_long) {
    if (buffer.empty()) {
        throw ContractViolation("select_diverse: candidate buffer is empty");
    }
    const MemoryEntry* best = &buffer.front();
    double best_sim = cosine_similarity(buffer.front().embedding, latest_long.embedding);
    for (std::size_t i = 1; i < buffer.size(); ++i) {
        const double sim = cosine_similarity(buffer[i].embedding, latest_long.embedding);
        // Strict comparison keeps the earliest frame on ties.
        if (sim < best_sim) {
            best_sim = sim;
            best = &buffer[i];
        }
    }
    return *best;
}

MemoryBank::MemoryBank(MemoryConfig cfg) : cfg_(cfg) {
    cfg_.validate();
}

ObserveOutcome MemoryBank::observe(MemoryEntry entry) {
    if (initial_ && entry.frame_index <= last_frame_index_) {
        throw ContractViolation("observe: frame " + std::to_string(entry.frame_index) +
                                " not after " + std::to_string(last_frame_index_));
    }
    last_frame_index_ = entry.frame_index;
    if (!initial_) initial_ = entry;

    short_term_.push_back(entry);
    if (static_cast<int>(short_term_.size()) > cfg_.n_short) short_term_.pop_front();

    ObserveOutcome outcome;
    const bool target_present = entry.mask.any_foreground();
    outcome.stable = entry.confidence > cfg_.gamma_iou && target_present;

    if (outcome.stable) {
        ++stable_streak_;
        buffer_.push_back(std::move(entry));
    } else {
        stable_streak_ = 0;
        buffer_.clear();
    }

    if (stable_streak_ == cfg_.delta) {
        const MemoryEntry& reference = long_term_.empty() ? *initial_ : long_term_.back();
        MemoryEntry picked = select_diverse(buffer_, reference);
        picked.temporal_embedding_id = admission_count_ % cfg_.n_long;
        ++admission_count_;

        long_term_.push_back(std::move(picked));
        if (static_cast<int>(long_term_.size()) > cfg_.n_long) long_term_.pop_front();

        outcome.admitted = true;
        outcome.admitted_frame = long_term_.back().frame_index;
        buffer_.clear();
        stable_streak_ = 0;
    }
    return outcome;
}

std::vector<const MemoryEntry*> MemoryBank::assemble_context() const {
    std::vector<const MemoryEntry*> out;
    std::vector<int> seen;
    const auto emit = [&](const MemoryEntry& e) {
        for (const int f : seen) {
            if (f == e.frame_index) return;
        }
        seen.push_back(e.frame_index);
        out.push_back(&e);
    };

    if (initial_) emit(*initial_);
    for (const auto& e : long_term_) emit(e);
    for (const auto& e : short_term_) emit(e);
    return out;
}

std::string MemoryBank::dump_state_line(const ObserveOutcome& outcome) const {
    std::ostringstream line;
    line << "t=" << last_frame_index_;
    line << " conf=";
    if (short_term_.empty()) {
        line << "-";
    } else {
        char buf[32];
        std::snprintf(buf, sizeof(buf), "%.6f", short_term_.back().confidence);
        line << buf;
    }
    line << " stable=" << (outcome.stable ? 1 : 0);
    line << " streak=" << stable_streak_;
    line << " buf=" << buffer_.size();
    line << " admit=";
    if (outcome.admitted) {
        line << outcome.admitted_frame;
    } else {
        line << "-";
    }
    line << " long=[";
    for (std::size_t i = 0; i < long_term_.size(); ++i) {
        if (i) line << ",";
        line << long_term_[i].frame_index;
    }
    line << "] short=[";
    for (std::size_t i = 0; i < short_term_.size(); ++i) {
        if (i) line << ",";
        line << short_term_[i].frame_index;
    }
    line << "]";
    return line.str();
}

} // namespace divetrack
