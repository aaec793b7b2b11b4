#include <gtest/gtest.h>

#include "qpdht/simnet/experiment.hpp"

using namespace qpdht;
using namespace qpdht::simnet;

namespace {

RunConfig base(std::uint32_t n, protocols::Protocol proto, std::uint64_t seed = 1, std::uint32_t lookups = 40) {
  RunConfig c;
  c.n = n;
  c.protocol = proto;
  c.seed = seed;
  c.lookups = lookups;
  return c;
}

std::string handler_echo(PeerId to, ByteView p) { return std::to_string(to) + ":" + std::to_string(p.size()); }

}  // namespace

TEST(Network, DeliversInTimeOrderAndConserves) {
  Metrics m;
  Transcript tr;
  Network net(NetConfig{5}, algebra::Drbg(3), &m, &tr);
  std::vector<std::pair<PeerId, Bytes>> out;
  for (PeerId i = 1; i <= 6; ++i) out.emplace_back(i, wire::frame(wire::Tag::auth_req, Bytes(i, 0)));
  net.set_drop_filter([](PeerId p) { return p == 2; });
  auto replies = net.exchange(0, out, net.base_timeout(), [](PeerId to, PeerId, ByteView p) -> std::optional<Bytes> {
    if (to == 3) return std::nullopt;  // silent
    return to_bytes(handler_echo(to, p));
  });
  EXPECT_EQ(replies.size(), 4u);
  for (std::size_t i = 1; i < replies.size(); ++i) EXPECT_LE(replies[i - 1].at, replies[i].at);
  for (const auto& r : replies) EXPECT_LE(r.at, 10u);
  EXPECT_EQ(m.dropped, 1u);
  EXPECT_EQ(m.sent, 6u + 4u);
  EXPECT_TRUE(m.conserved());
  EXPECT_EQ(m.tag_count(wire::Tag::auth_req), 6u);
  // not everyone answered, so the waiter sat out the full timeout
  EXPECT_EQ(net.now(), net.base_timeout());
  EXPECT_EQ(tr.records().size(), 6u + 4u);
}

TEST(Network, LateRepliesAreCounted) {
  Metrics m;
  Network net(NetConfig{10}, algebra::Drbg(1), &m);
  std::vector<std::pair<PeerId, Bytes>> out;
  for (PeerId i = 0; i < 50; ++i) out.emplace_back(i, Bytes{1});
  auto replies = net.exchange(99, out, 3, [](PeerId, PeerId, ByteView) { return std::optional<Bytes>(Bytes{2}); });
  EXPECT_GT(m.late, 0u);
  EXPECT_EQ(replies.size() + m.late, 50u);
  EXPECT_TRUE(m.conserved());
}

TEST(Fit, ExactDataFitsPerfectly) {
  std::vector<std::pair<double, double>> s;
  for (double n : {64.0, 256.0, 1024.0, 4096.0}) s.emplace_back(n, 3.5 * std::log2(n) * std::log2(n));
  auto f = fit_complexity(s, Model::log2_n);
  EXPECT_NEAR(f.coefficient, 3.5, 1e-9);
  EXPECT_NEAR(f.r2, 1.0, 1e-12);
  EXPECT_LT(fit_complexity(s, Model::log_n).r2, f.r2);
  EXPECT_THROW(fit_complexity({{64, 1}}, Model::log_n), InvalidArgument);
}

TEST(Experiment, DeterministicOutputs) {
  auto c = base(128, protocols::Protocol::rcpqp2, 9);
  c.byzantine_fraction = 0.1;
  auto a = run_experiment(c), b = run_experiment(c);
  EXPECT_EQ(a.csv(), b.csv());
  EXPECT_EQ(a.summary().dump(), b.summary().dump());
  EXPECT_EQ(a.transcript_text(), b.transcript_text());
  c.seed = 10;
  EXPECT_NE(run_experiment(c).transcript_text(), a.transcript_text());
}

TEST(Experiment, ZeroLookups) {
  auto r = run_experiment(base(64, protocols::Protocol::rcp1, 1, 0));
  EXPECT_EQ(r.csv(), std::string(kCsvHeader) + "\n");
  EXPECT_EQ(r.summary().at("lookups"), 0);
  EXPECT_EQ(r.summary().at("mean_messages"), 0.0);
}

TEST(Experiment, CsvHeaderIsFrozen) {
  auto r = run_experiment(base(64, protocols::Protocol::rcpqp1, 2, 3));
  auto csv = r.csv();
  EXPECT_EQ(csv.substr(0, csv.find('\n')),
            "lookup,protocol,n,eta,requester,key,start_quorum,owner_quorum,dest_quorum,status,hops,messages,bytes,"
            "dropped,requester_exps,responder_exps,retries,latency");
  EXPECT_EQ(std::count(csv.begin(), csv.end(), '\n'), 4);
  auto second = csv.substr(csv.find('\n') + 1);
  EXPECT_EQ(second.rfind("0,rcpqp1,64,6,", 0), 0u) << second;
}

TEST(Experiment, MeansStableAcrossSeeds) {
  auto c = base(1024, protocols::Protocol::rcpqp2, 1, 300);
  c.eta = 16;
  auto a = run_experiment(c);
  c.seed = 2;
  auto b = run_experiment(c);
  auto sa = a.summary().at("stddev_messages").get<double>(), sb = b.summary().at("stddev_messages").get<double>();
  auto se = std::sqrt((sa * sa + sb * sb) / 300.0);
  EXPECT_LE(std::abs(a.mean_messages() - b.mean_messages()), 3 * se);
}

TEST(Experiment, P256BackendRuns) {
  auto c = base(32, protocols::Protocol::rcpqp1, 4, 3);
  c.group = "p256";
  c.eta = 4;
  auto r = run_experiment(c);
  EXPECT_EQ(r.failures, 0u);
}

TEST(Config, MissingAndUnknownFieldsAreNamed) {
  auto err = [](const char* text) {
    try {
      parse_run_config(json::parse(text));
    } catch (const ConfigError& e) {
      return std::string(e.what());
    }
    return std::string();
  };
  EXPECT_NE(err(R"({"protocol":"rcp1"})").find("'n'"), std::string::npos);
  EXPECT_NE(err(R"({"n":64})").find("'protocol'"), std::string::npos);
  EXPECT_NE(err(R"({"n":64,"protocol":"rcp1","colour":1})").find("'colour'"), std::string::npos);
  EXPECT_NE(err(R"({"n":"x","protocol":"rcp1"})").find("'n'"), std::string::npos);
  EXPECT_NE(err(R"({"n":64,"protocol":"rcp9"})").find("rcp9"), std::string::npos);
  EXPECT_NE(err(R"({"n":64,"protocol":"rcp1","opts":{"pad":1}})").find("opts.pad"), std::string::npos);
  auto c = parse_run_config(json::parse(R"({"n":64,"protocol":"rcpqp2","opts":{"pad_chain":2},"behaviors":["drop"]})"));
  EXPECT_EQ(c.opts.pad_chain, 2u);
  EXPECT_EQ(c.behaviors, std::vector<dht::Behavior>{dht::Behavior::drop});
  EXPECT_EQ(c.lookups, 100u);
}

TEST(Sweep, QuorumProtocolGrowsFasterThanChain) {
  auto c = base(0, protocols::Protocol::rcpqp1, 3, 30);
  auto one = sweep(c, {64, 256, 1024});
  c.protocol = protocols::Protocol::rcpqp2;
  auto two = sweep(c, {64, 256, 1024});
  EXPECT_GT(one.log2_fit.r2, one.log_fit.r2);
  EXPECT_GT(two.log_fit.r2, two.log2_fit.r2);
}
