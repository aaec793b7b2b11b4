#pragma once

#include <functional>
#include <optional>
#include <queue>

#include "qpdht/algebra/drbg.hpp"
#include "qpdht/algebra/exp_counter.hpp"
#include "qpdht/simnet/metrics.hpp"

namespace qpdht::simnet {

using PeerId = std::uint32_t;

struct NetConfig {
  std::uint64_t d_max = 10;  // per-message delay is uniform in [1, d_max]
};

struct Reply {
  PeerId from = 0;
  Bytes payload;
  std::uint64_t at = 0;
};

// Recipient logic: given (to, from, payload) return the reply payload, or
// nothing to stay silent.
using Handler = std::function<std::optional<Bytes>(PeerId to, PeerId from, ByteView payload)>;

// Discrete-event network with virtual time. A waiting party sends a batch,
// the batch is delivered in time order, recipients reply, and replies that
// arrive after the deadline are counted late.
class Network {
 public:
  Network(NetConfig cfg, algebra::Drbg rng, Metrics* metrics = nullptr, Transcript* transcript = nullptr)
      : cfg_(cfg), rng_(std::move(rng)), metrics_(metrics), transcript_(transcript) {
    if (cfg_.d_max == 0) throw InvalidArgument("d_max must be positive");
  }

  std::uint64_t now() const { return now_; }
  std::uint64_t d_max() const { return cfg_.d_max; }
  std::uint64_t base_timeout() const { return 2 * cfg_.d_max; }
  std::uint64_t round_length() const { return 2 * cfg_.d_max; }
  std::uint64_t round() const { return now_ / round_length(); }
  void advance_to(std::uint64_t t) { now_ = std::max(now_, t); }
  void set_drop_filter(std::function<bool(PeerId)> f) { drops_ = std::move(f); }
  void set_rng(algebra::Drbg rng) { rng_ = std::move(rng); }
  void set_metrics(Metrics* m) { metrics_ = m; }
  void set_transcript(Transcript* t) { transcript_ = t; }

  std::vector<Reply> exchange(PeerId from, const std::vector<std::pair<PeerId, Bytes>>& out, std::uint64_t timeout,
                              const Handler& handler) {
    const std::uint64_t start = now_, deadline = now_ + timeout;
    struct Event {
      std::uint64_t at;
      std::uint64_t seq;
      bool is_reply;
      PeerId src, dst;
      std::uint64_t sent_at;
      Bytes payload;
    };
    auto later = [](const Event& a, const Event& b) { return a.at != b.at ? a.at > b.at : a.seq > b.seq; };
    std::priority_queue<Event, std::vector<Event>, decltype(later)> q(later);
    std::uint64_t seq = 0;
    for (const auto& [to, payload] : out) {
      count_sent(payload);
      q.push(Event{start + delay(), seq++, false, from, to, start, payload});
    }
    std::vector<Reply> replies;
    std::size_t answered = 0;
    std::uint64_t last_arrival = start;
    while (!q.empty()) {
      Event ev = q.top();
      q.pop();
      if (!ev.is_reply) {
        if (drops_ && drops_(ev.dst)) {
          finish(ev.sent_at, ev.at, ev.src, ev.dst, ev.payload, "dropped");
          if (metrics_) ++metrics_->dropped;
          continue;
        }
        finish(ev.sent_at, ev.at, ev.src, ev.dst, ev.payload, "delivered");
        if (metrics_) ++metrics_->delivered;
        const auto saved = now_;
        now_ = ev.at;
        algebra::ExpScope scope;
        auto reply = handler(ev.dst, ev.src, ev.payload);
        if (metrics_) metrics_->responder_exps += scope.delta();
        now_ = saved;
        if (reply) {
          count_sent(*reply);
          q.push(Event{ev.at + delay(), seq++, true, ev.dst, ev.src, ev.at, std::move(*reply)});
        }
      } else if (ev.at <= deadline) {
        finish(ev.sent_at, ev.at, ev.src, ev.dst, ev.payload, "delivered");
        if (metrics_) ++metrics_->delivered;
        ++answered;
        last_arrival = std::max(last_arrival, ev.at);
        replies.push_back(Reply{ev.src, std::move(ev.payload), ev.at});
      } else {
        finish(ev.sent_at, ev.at, ev.src, ev.dst, ev.payload, "late");
        if (metrics_) ++metrics_->late;
      }
    }
    now_ = answered == out.size() ? last_arrival : deadline;
    return replies;
  }

  // Fire-and-forget batch with no replies expected.
  void send_all(PeerId from, const std::vector<std::pair<PeerId, Bytes>>& out, const Handler& handler) {
    exchange(from, out, base_timeout(), [&](PeerId to, PeerId src, ByteView p) {
      handler(to, src, p);
      return std::optional<Bytes>{};
    });
  }

 private:
  std::uint64_t delay() { return 1 + rng_.uniform(cfg_.d_max); }

  void count_sent(const Bytes& payload) {
    if (!metrics_) return;
    ++metrics_->sent;
    metrics_->bytes += payload.size();
    try {
      for (const auto& f : wire::parse_bundle(payload)) ++metrics_->by_tag[static_cast<std::size_t>(f.tag)];
    } catch (const DecodeError&) {
    }
  }

  void finish(std::uint64_t sent_at, std::uint64_t at, PeerId src, PeerId dst, const Bytes& payload,
              const char* status) {
    if (!transcript_) return;
    transcript_->record(TranscriptRecord{sent_at, at, src, dst, wire::bundle_tags(payload), payload.size(), status,
                                         transcript_->capture() ? payload : Bytes{}});
  }

  NetConfig cfg_;
  algebra::Drbg rng_;
  Metrics* metrics_;
  Transcript* transcript_;
  std::function<bool(PeerId)> drops_;
  std::uint64_t now_ = 0;
};

}  // namespace qpdht::simnet
