#include <gtest/gtest.h>

#include <vector>

#include "psocsim/sim.hpp"

using namespace psocsim;

TEST(Schedule, EventAtTimeZeroFiresFirst) {
  Simulator sim;
  auto c = sim.add_component("c");
  std::vector<int> order;
  sim.schedule_at(SimTime{10}, c, EventKind::DescriptorComplete, [&] { order.push_back(2); });
  sim.schedule_at(SimTime{0}, c, EventKind::PollTick, [&] { order.push_back(1); });
  EXPECT_EQ(sim.run_until_quiescent(), RunOutcome::Completed);
  EXPECT_EQ(order, (std::vector<int>{1, 2}));
}

TEST(Schedule, EqualTimesDeliverInInsertionOrder) {
  Simulator sim;
  auto c = sim.add_component("c");
  std::vector<int> order;
  for (int i = 0; i < 5; ++i) {
    sim.schedule_at(SimTime{100}, c, EventKind::FifoSpaceAvailable, [&order, i] { order.push_back(i); });
  }
  sim.run_until_quiescent();
  EXPECT_EQ(order, (std::vector<int>{0, 1, 2, 3, 4}));
  EXPECT_EQ(sim.now().ns, 100u);
}

TEST(Schedule, PastEventRejected) {
  Simulator sim;
  auto c = sim.add_component("c");
  bool threw = false;
  sim.schedule_at(SimTime{10}, c, EventKind::PollTick, [&] {
    try {
      sim.schedule_at(SimTime{5}, c, EventKind::PollTick, [] {});
    } catch (const SchedulingInPast&) {
      threw = true;
    }
  });
  sim.run_until_quiescent();
  EXPECT_TRUE(threw);
}

TEST(Run, EmptyWorkloadCompletesAtZero) {
  Simulator sim;
  EXPECT_EQ(sim.run_until_quiescent(), RunOutcome::Completed);
  EXPECT_EQ(sim.now().ns, 0u);
}

TEST(Run, OutstandingWorkWithEmptyQueueIsDeadlock) {
  Simulator sim;
  sim.begin_work();
  EXPECT_EQ(sim.run_until_quiescent(), RunOutcome::Deadlock);
}

TEST(Run, IdlePollingIsDeadlockAfterWindow) {
  Simulator sim;
  auto c = sim.add_component("poller");
  sim.begin_work();
  std::uint64_t ticks = 0;
  std::function<void()> tick = [&] {
    ++ticks;
    sim.schedule_in(200, c, EventKind::PollTick, tick);
  };
  sim.schedule_in(0, c, EventKind::PollTick, tick);
  WatchdogSpec w;
  w.deadlock_poll_window = 50;
  EXPECT_EQ(sim.run_until_quiescent(w), RunOutcome::Deadlock);
  EXPECT_EQ(ticks, 50u);
}

TEST(Run, PollingBehindSlowDeviceStepIsNotDeadlock) {
  // A device step far in the future outlasts the poll window; the poller is
  // waiting on real work, not blocked.
  Simulator sim;
  auto c = sim.add_component("poller");
  auto dev = sim.add_component("device");
  sim.begin_work();
  bool done = false;
  std::function<void()> tick = [&] {
    if (!done) sim.schedule_in(200, c, EventKind::PollTick, tick);
  };
  sim.schedule_in(0, c, EventKind::PollTick, tick);
  sim.schedule_in(1'000'000, dev, EventKind::DeviceStep, [&] {
    sim.note_progress(1);
    done = true;
    sim.end_work();
  });
  WatchdogSpec w;
  w.deadlock_poll_window = 50;
  EXPECT_EQ(sim.run_until_quiescent(w), RunOutcome::Completed);
}

TEST(Run, PollingWithProgressIsNotDeadlock) {
  Simulator sim;
  auto c = sim.add_component("poller");
  sim.begin_work();
  int ticks = 0;
  std::function<void()> tick = [&] {
    sim.note_progress(1);
    if (++ticks == 500) {
      sim.end_work();
      return;
    }
    sim.schedule_in(200, c, EventKind::PollTick, tick);
  };
  sim.schedule_in(0, c, EventKind::PollTick, tick);
  WatchdogSpec w;
  w.deadlock_poll_window = 10;
  EXPECT_EQ(sim.run_until_quiescent(w), RunOutcome::Completed);
}

TEST(Run, WatchdogBoundsRunawayTime) {
  Simulator sim;
  auto c = sim.add_component("c");
  std::function<void()> step = [&] {
    sim.note_progress(1);
    sim.schedule_in(1000, c, EventKind::DeviceStep, step);
  };
  sim.schedule_in(0, c, EventKind::DeviceStep, step);
  WatchdogSpec w;
  w.limit_ns = 10'000;
  EXPECT_EQ(sim.run_until_quiescent(w), RunOutcome::WatchdogExpired);
  EXPECT_EQ(sim.now().ns, 10'000u);
}

TEST(Run, DeliveredTimesAreMonotone) {
  Simulator sim;
  auto c = sim.add_component("c");
  sim.enable_trace();
  for (std::uint64_t t : {50u, 10u, 30u, 10u, 0u}) sim.schedule_at(SimTime{t}, c, EventKind::PollTick, [] {});
  sim.run_until_quiescent();
  const auto& tr = sim.trace();
  ASSERT_EQ(tr.size(), 5u);
  for (std::size_t i = 1; i < tr.size(); ++i) EXPECT_LE(tr[i - 1].at, tr[i].at);
}

TEST(Run, OutcomeNames) {
  EXPECT_STREQ(to_string(RunOutcome::Completed), "ok");
  EXPECT_STREQ(to_string(RunOutcome::Deadlock), "deadlock");
  EXPECT_STREQ(to_string(RunOutcome::WatchdogExpired), "watchdog");
}
