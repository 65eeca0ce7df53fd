#include <gtest/gtest.h>

#include <cmath>

#include "socf/agent.hpp"
#include "socf/comm.hpp"

using namespace socf;

namespace {

StatusMessage message_at(std::int64_t k, double sent_at) {
  StatusMessage m;
  m.index = k;
  m.sent_at = sent_at;
  m.predicted_at = sent_at + 0.07 + 0.1;
  return m;
}

// Sender on the 0.0 grid, receiver 0.05 later: phi = 0.05 as in the
// paper's transmission example.
LinkState example_link(CommConfig cfg = {}) { return LinkState(1, 0.0, 0.05, cfg); }

}  // namespace

TEST(KappaFloor, TableRows) {
  EXPECT_NEAR(kappa_floor(0.05, 0.069, 0.0, 0.1), 0.15, 1e-12);
  EXPECT_NEAR(kappa_floor(0.05, 0.045, 0.0, 0.1), 0.05, 1e-12);
  EXPECT_NEAR(kappa_floor(0.05, 0.053, 0.0, 0.1), 0.15, 1e-12);
}

TEST(KappaFloor, GridCountingMatchesTheRule) {
  LinkState link = example_link();
  const double sent[] = {20.0, 20.1, 20.3};
  const double tau[] = {0.069, 0.045, 0.053};
  const double expect[] = {0.15, 0.05, 0.15};
  for (int i = 0; i < 3; ++i) {
    const auto k = static_cast<std::int64_t>(std::llround(sent[i] / 0.1));
    StatusMessage m = message_at(k, link.sender_time(k));
    Delivery d{false, tau[i], m.sent_at + tau[i]};
    EXPECT_NEAR(link.record(m, d).kappa_floor, expect[i], 1e-9);
  }
}

TEST(KappaFloor, BracketsTheTransmissionDelay) {
  for (double phi : {0.0, 0.013, 0.05, 0.099}) {
    for (double tau = 0.0; tau < 0.5; tau += 0.00071) {
      for (double d : {0.0, 0.02}) {
        const double k = kappa_floor(phi, tau, d, 0.1);
        EXPECT_GE(k, tau + d - 1e-9);
        EXPECT_LT(k, tau + d + 0.1 + 1e-9);
        const double nu = (k - phi) / 0.1;
        EXPECT_NEAR(nu, std::round(nu), 1e-9);
      }
    }
  }
}

TEST(KappaFloor, StepFunctionJumpsAtGridPoints) {
  const double phi = 0.03;
  for (int k = 0; k < 5; ++k) {
    const double edge = phi + k * 0.1;
    EXPECT_NEAR(kappa_floor(phi, edge, 0.0, 0.1), edge, 1e-12);
    EXPECT_NEAR(kappa_floor(phi, edge + 1e-6, 0.0, 0.1), edge + 0.1, 1e-12);
  }
}

TEST(SelectKappa, WindowMaximum) {
  LinkState link = example_link();
  const double taus[] = {0.045, 0.069, 0.045};
  for (int i = 0; i < 3; ++i) {
    StatusMessage m = message_at(200 + i, link.sender_time(200 + i));
    link.record(m, {false, taus[i], m.sent_at + taus[i]});
  }
  const auto k = link.select_kappa(20.3, false);
  ASSERT_TRUE(k);
  EXPECT_NEAR(k->seconds, 0.15, 1e-9);
}

TEST(SelectKappa, HeavyLossExtendsByOneSecond) {
  LinkState link = example_link();
  StatusMessage m = message_at(200, link.sender_time(200));
  link.record(m, {false, 0.069, m.sent_at + 0.069});
  const auto k = link.select_kappa(20.3, true);
  ASSERT_TRUE(k);
  EXPECT_NEAR(k->seconds, 1.15, 1e-9);
}

TEST(SelectKappa, SingleSampleAndEmptyHistory) {
  LinkState link = example_link();
  EXPECT_FALSE(link.select_kappa(20.3, false));
  StatusMessage m = message_at(201, link.sender_time(201));
  link.record(m, {false, 0.045, m.sent_at + 0.045});
  EXPECT_FALSE(link.select_kappa(20.1, false));  // not arrived yet
  const auto k = link.select_kappa(20.2, false);
  ASSERT_TRUE(k);
  EXPECT_NEAR(k->seconds, 0.05, 1e-9);
}

TEST(SelectKappa, TargetLandsOnTheSenderGrid) {
  LinkState link(1, 0.037, 0.081, {});
  for (int cycles = 0; cycles < 15; ++cycles) {
    for (std::int64_t j = 100; j < 110; ++j) {
      const double kappa = link.phi() + cycles * 0.1;
      const std::int64_t k = link.target_sender_index(j, cycles);
      EXPECT_NEAR(link.receiver_time(j) - kappa, link.sender_time(k), 1e-9);
    }
  }
}

TEST(LinkBuffer, DeliveryWithoutArrivalIsRejected) {
  LinkState link = example_link();
  EXPECT_THROW(link.record(message_at(1, 0.1), Delivery{}), ContractViolation);
}

TEST(Transmit, DelaysStayInTheSupport) {
  CommConfig cfg;
  ChannelStream rng(3, 1);
  for (int i = 0; i < 10000; ++i) {
    StatusMessage m = message_at(i, i * 0.1);
    const Delivery d = transmit(m, cfg, rng);
    ASSERT_FALSE(d.lost);
    EXPECT_GE(d.arrival, m.sent_at + 0.04);
    EXPECT_LE(d.arrival, m.sent_at + 0.08);
  }
}

TEST(Transmit, CertainLoss) {
  CommConfig cfg;
  cfg.loss_rate = 1.0;
  ChannelStream rng(3, 1);
  for (int i = 0; i < 1000; ++i) EXPECT_TRUE(transmit(message_at(i, i * 0.1), cfg, rng).lost);
}

TEST(Transmit, EmpiricalLossRate) {
  for (double p : {0.01, 0.10, 0.25, 0.50}) {
    CommConfig cfg;
    cfg.loss_rate = p;
    ChannelStream rng(99, 4);
    int lost = 0;
    const int n = 100000;
    for (int i = 0; i < n; ++i) lost += transmit(message_at(i, i * 0.1), cfg, rng).lost;
    EXPECT_NEAR(static_cast<double>(lost) / n, p, 0.01) << p;
  }
}

TEST(Transmit, SameSeedSameSequence) {
  CommConfig cfg;
  cfg.loss_rate = 0.3;
  ChannelStream a(5, 2), b(5, 2), c(5, 3);
  bool differs = false;
  for (int i = 0; i < 1000; ++i) {
    const Delivery da = transmit(message_at(i, i * 0.1), cfg, a);
    const Delivery db = transmit(message_at(i, i * 0.1), cfg, b);
    const Delivery dc = transmit(message_at(i, i * 0.1), cfg, c);
    EXPECT_EQ(da.lost, db.lost);
    EXPECT_EQ(da.arrival, db.arrival);
    differs = differs || da.lost != dc.lost || da.arrival != dc.arrival;
  }
  EXPECT_TRUE(differs);
}

TEST(LinkBuffer, NeighborsAndLossEstimate) {
  CommConfig cfg;
  LinkState link = example_link(cfg);
  // Every third message lost over 20 s.
  for (int k = 0; k < 200; ++k) {
    StatusMessage m = message_at(k, link.sender_time(k));
    const bool lost = k % 3 == 0;
    link.record(m, lost ? Delivery{true} : Delivery{false, 0.05, m.sent_at + 0.05});
  }
  EXPECT_EQ(link.delivered(99, 20.0), nullptr);
  ASSERT_NE(link.older_neighbor(99, 20.0), nullptr);
  EXPECT_EQ(link.older_neighbor(99, 20.0)->msg.index, 98);
  EXPECT_NEAR(link.estimated_loss(19.95), 1.0 / 3.0, 0.02);
  EXPECT_TRUE(link.heavy_loss(19.95));
}

TEST(LinkBuffer, NewerMessageCoveringALostInstant) {
  CommConfig cfg;
  LinkState link = example_link(cfg);
  Trajectory tr(0.0, 0.0, 5.0);
  tr.append(0.3, 30.0);
  for (int k : {10, 12}) {
    const StatusMessage m = make_status_message(VehicleSpec{}, tr, k, link.sender_time(k), 0.3, 0.1, 1.5);
    link.record(m, {false, 0.05, m.sent_at + 0.05});
  }
  const double t_pred = link.sender_time(11) + 0.07 + 0.1;
  const auto* r = link.newer_covering(11, t_pred, 5.0);
  ASSERT_NE(r, nullptr);
  EXPECT_EQ(r->msg.index, 12);
  EXPECT_NEAR(r->msg.state_at(t_pred).x, tr.state_at(t_pred).x, 1e-12);
  EXPECT_EQ(link.newer_covering(11, t_pred, 1.2), nullptr);  // not yet arrived
}
