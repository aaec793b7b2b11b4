#pragma once

#include <array>
#include <cstdint>
#include <string>
#include <vector>

#include "qpdht/wire.hpp"

namespace qpdht::simnet {

struct Metrics {
  std::uint64_t sent = 0;  // transmissions
  std::uint64_t delivered = 0;
  std::uint64_t dropped = 0;  // swallowed by an adversarial recipient
  std::uint64_t late = 0;     // arrived after the waiting party's deadline
  std::uint64_t bytes = 0;
  std::array<std::uint64_t, wire::kTagCount> by_tag{};  // frames, by tag
  std::uint64_t responder_exps = 0;

  bool conserved() const { return sent == delivered + dropped + late; }

  Metrics& operator+=(const Metrics& o) {
    sent += o.sent;
    delivered += o.delivered;
    dropped += o.dropped;
    late += o.late;
    bytes += o.bytes;
    for (std::size_t i = 0; i < by_tag.size(); ++i) by_tag[i] += o.by_tag[i];
    responder_exps += o.responder_exps;
    return *this;
  }
  friend Metrics operator-(Metrics a, const Metrics& b) {
    a.sent -= b.sent;
    a.delivered -= b.delivered;
    a.dropped -= b.dropped;
    a.late -= b.late;
    a.bytes -= b.bytes;
    for (std::size_t i = 0; i < a.by_tag.size(); ++i) a.by_tag[i] -= b.by_tag[i];
    a.responder_exps -= b.responder_exps;
    return a;
  }
  std::uint64_t tag_count(wire::Tag t) const { return by_tag[static_cast<std::size_t>(t)]; }
};

struct TranscriptRecord {
  std::uint64_t sent_at = 0;
  std::uint64_t arrive_at = 0;
  std::uint32_t from = 0;
  std::uint32_t to = 0;
  std::string tags;
  std::size_t bytes = 0;
  std::string status;  // delivered | dropped | late
  Bytes payload;       // only when capture is on
};

class Transcript {
 public:
  explicit Transcript(bool capture_payloads = false) : capture_(capture_payloads) {}

  bool capture() const { return capture_; }
  void note(std::string line) { lines_.push_back(std::move(line)); }
  void record(TranscriptRecord r) {
    std::string line = "msg t=" + std::to_string(r.sent_at) + " arr=" + std::to_string(r.arrive_at) +
                       " from=" + std::to_string(r.from) + " to=" + std::to_string(r.to) + " " + r.tags +
                       " bytes=" + std::to_string(r.bytes) + " " + r.status;
    lines_.push_back(std::move(line));
    if (!capture_) r.payload.clear();
    records_.push_back(std::move(r));
  }
  const std::vector<std::string>& lines() const { return lines_; }
  const std::vector<TranscriptRecord>& records() const { return records_; }
  void clear() {
    lines_.clear();
    records_.clear();
  }

 private:
  bool capture_;
  std::vector<std::string> lines_;
  std::vector<TranscriptRecord> records_;
};

}  // namespace qpdht::simnet
