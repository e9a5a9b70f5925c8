#pragma once
// Streaming memory bank for one tracked object.
//
// Layout: a permanent initial entry l0 (the prompt frame), a bounded FIFO of
// long-term entries selected for diversity, and a FIFO of the most recent
// frames. High-confidence frames with a visible target accumulate in a
// candidate buffer; once the target has been stably present for `delta`
// consecutive frames, the candidate least similar (cosine) to the latest
// long-term entry is admitted and the buffer is cleared. Any unstable frame
// resets the streak and the buffer.

#include <deque>
#include <optional>
#include <string>
#include <vector>

#include "divetrack/mask.hpp"
#include "divetrack/types.hpp"

namespace divetrack {

struct MemoryEntry {
    int frame_index = 0;
    Embedding embedding;
    SoftMask mask;
    double confidence = 0.0; // predicted mask-quality score in [0, 1]
    std::optional<int> temporal_embedding_id; // long-term slot, set on admission

    MemoryEntry(int frame_index, Embedding embedding, SoftMask mask, double confidence);
};

struct MemoryConfig {
    int delta = 5;           // candidate buffer size
    double gamma_iou = 0.95; // confidence threshold for stability
    int n_long = 4;          // long-term capacity (excluding l0)
    int n_short = 6;         // short-term span

    void validate() const;
};

// The most diverse candidate: argmin of cosine similarity between candidate
// embeddings and the reference entry. Ties break toward the earliest frame.
const MemoryEntry& select_diverse(const std::vector<MemoryEntry>& buffer,
                                  const MemoryEntry& latest_long);

// Per-observation outcome, used for traces and gate auditing.
struct ObserveOutcome {
    bool stable = false;
    bool admitted = false;
    int admitted_frame = -1;
};

class MemoryBank {
public:
    explicit MemoryBank(MemoryConfig cfg);

    // Feed the next frame's entry. Frame indices must be strictly increasing;
    // the first observed entry becomes the permanent l0.
    ObserveOutcome observe(MemoryEntry entry);

    // l0, then long-term oldest to newest, then short-term oldest to newest.
    // A frame present in several sections is emitted once, in the earliest
    // section. Pointers stay valid until the next observe().
    std::vector<const MemoryEntry*> assemble_context() const;

    const MemoryConfig& config() const noexcept { return cfg_; }
    const std::optional<MemoryEntry>& initial() const noexcept { return initial_; }
    const std::deque<MemoryEntry>& long_term() const noexcept { return long_term_; }
    const std::deque<MemoryEntry>& short_term() const noexcept { return short_term_; }
    const std::vector<MemoryEntry>& buffer() const noexcept { return buffer_; }
    int stable_streak() const noexcept { return stable_streak_; }

    // One line describing the bank after the latest transition; the trace
    // format consumed by the golden-trace tests and the experiment reports.
    std::string dump_state_line(const ObserveOutcome& outcome) const;

private:
    MemoryConfig cfg_;
    std::optional<MemoryEntry> initial_;
    std::deque<MemoryEntry> long_term_;
    std::deque<MemoryEntry> short_term_;
    std::vector<MemoryEntry> buffer_;
    int stable_streak_ = 0;
    int admission_count_ = 0;
    int last_frame_index_ = -1;
};

} // namespace divetrack
