#include <catch2/catch_amalgamated.hpp>

#include "rcd/link_scheduler.hpp"
#include "support/generators.hpp"
#include "support/oracles.hpp"

using namespace rcd;
using namespace rcd::testsupport;

namespace {

Request elastic(const std::string& id, double q, SlotIndex arrival, SlotIndex deadline) {
  Request r;
  r.id = id;
  r.volume = q;
  r.arrival = arrival;
  r.deadline = deadline;
  return r;
}

Request reservation(const std::string& id, double q, SlotIndex arrival, SlotIndex deadline) {
  Request r = elastic(id, q, arrival, deadline);
  r.kind = RequestKind::kReservation;
  return r;
}

}  // namespace

TEST_CASE("submit writes the latest-first profile and decrements residuals") {
  LinkScheduler sched(1.0);
  AdmissionResult r = sched.submit(elastic("r1", 2.5, 0, 5));
  REQUIRE(r.accepted);
  CHECK(r.profile.amount_at(5) == Catch::Approx(1.0));
  CHECK(r.profile.amount_at(4) == Catch::Approx(1.0));
  CHECK(r.profile.amount_at(3) == Catch::Approx(0.5));
  CHECK(sched.link().residual_at(3) == Catch::Approx(0.5));
  CHECK(sched.link().residual_at(2) == Catch::Approx(1.0));
  CHECK(sched.invariants_hold());
}

TEST_CASE("admission boundary: an exactly-fitting request is accepted") {
  LinkScheduler sched(1.0);
  REQUIRE(sched.submit(elastic("fill", 2.0, 0, 5)).accepted);
  // window (0,5] now holds 3.0 of free capacity; take exactly all of it.
  AdmissionResult r = sched.submit(elastic("edge", 3.0, 0, 5));
  CHECK(r.accepted);
  AdmissionResult over = sched.submit(elastic("over", 0.1, 0, 5));
  REQUIRE_FALSE(over.accepted);
  CHECK(over.reason == RejectReason::kInsufficientCapacity);
  CHECK(over.shortfall == Catch::Approx(0.1).margin(1e-9));
}

TEST_CASE("rejection leaves the state untouched") {
  LinkScheduler sched(1.0);
  REQUIRE(sched.submit(elastic("a", 1.5, 0, 3)).accepted);
  auto before = sched.link().residual_window(3);
  REQUIRE_FALSE(sched.submit(elastic("b", 2.0, 0, 3)).accepted);
  CHECK(sched.link().residual_window(3) == before);
  CHECK(sched.stats().rejected == 1);
}

TEST_CASE("past-deadline and horizon rejections") {
  LinkScheduler fixed(1.0, 4);
  CHECK(fixed.submit(elastic("p", 1.0, 0, 0)).reason == RejectReason::kPastDeadline);
  CHECK(fixed.submit(elastic("h", 1.0, 0, 9)).reason == RejectReason::kHorizon);
  CHECK(fixed.submit(elastic("ok", 1.0, 0, 4)).accepted);
}

TEST_CASE("submit precondition violations throw") {
  LinkScheduler sched(1.0);
  CHECK_THROWS_AS(sched.submit(elastic("x", -1.0, 0, 3)), std::invalid_argument);
  CHECK_THROWS_AS(sched.submit(elastic("x", 1.0, 2, 3)), std::invalid_argument);
  REQUIRE(sched.submit(elastic("dup", 0.5, 0, 3)).accepted);
  CHECK_THROWS_AS(sched.submit(elastic("dup", 0.5, 0, 3)), std::invalid_argument);
}

TEST_CASE("pull_forward drains the earliest future mass into the current slot") {
  LinkScheduler sched(1.0);
  // Occupy 0.6 of the current slot budget indirectly: X has 0.3 at slot 2,
  // Y has 0.5 at slot 3; the current slot has 0.4 spare left after an
  // initial pull of Z's 0.6.
  REQUIRE(sched.submit(elastic("z", 0.6, 0, 1)).accepted);   // {1:0.6}
  REQUIRE(sched.submit(elastic("x", 0.3, 0, 2)).accepted);   // {2:0.3}
  REQUIRE(sched.submit(elastic("y", 0.5, 0, 3)).accepted);   // {3:0.5}
  auto moves = sched.pull_forward();
  // spare 1.0: Z 0.6 from slot 1, then X 0.3 from slot 2, then Y 0.1.
  REQUIRE(moves.size() == 3);
  CHECK(moves[0].id == "z");
  CHECK(moves[0].amount == Catch::Approx(0.6));
  CHECK(moves[1].id == "x");
  CHECK(moves[1].amount == Catch::Approx(0.3));
  CHECK(moves[2].id == "y");
  CHECK(moves[2].amount == Catch::Approx(0.1).margin(1e-12));
  CHECK(sched.invariants_hold());
  SlotReport report = sched.advance();
  CHECK(report.sent == Catch::Approx(1.0));
  CHECK(report.utilization == Catch::Approx(1.0));
  // Totals preserved: y still owes 0.4 at slot 3.
  CHECK(sched.admitted().at("y").remaining == Catch::Approx(0.4));
}

TEST_CASE("pull_forward with no spare or no future mass is a no-op") {
  LinkScheduler sched(1.0);
  SECTION("no future allocations") { CHECK(sched.pull_forward().empty()); }
  SECTION("no spare capacity") {
    REQUIRE(sched.submit(elastic("a", 1.0, 0, 1)).accepted);
    sched.pull_forward();
    sched.advance();
    // Slot 1: fill it completely, then nothing else can move.
    REQUIRE(sched.submit(elastic("b", 1.0, 1, 2)).accepted);
    auto first = sched.pull_forward();
    REQUIRE(first.size() == 1);
    CHECK(sched.pull_forward().empty());
  }
}

TEST_CASE("advance reports sent volume and utilization") {
  LinkScheduler sched(1.0);
  REQUIRE(sched.submit(elastic("a", 0.9, 0, 2)).accepted);
  sched.pull_forward();
  SlotReport report = sched.advance();
  CHECK(report.slot == 0);
  CHECK(report.sent == Catch::Approx(0.9));
  CHECK(report.utilization == Catch::Approx(0.9));
  CHECK(report.accepted == 1);
  CHECK(report.rejected == 0);
  // Request finished: retired from the admitted set.
  CHECK(sched.admitted().empty());
  CHECK(sched.stats().completed == 1);
}

TEST_CASE("work conservation: spare current capacity implies no future mass") {
  Gen gen(42);
  for (int trial = 0; trial < 50; ++trial) {
    LinkScheduler sched(1.0);
    int id = 0;
    for (SlotIndex t = 0; t < 8; ++t) {
      int n = gen.uniform_int(0, 3);
      for (int i = 0; i < n; ++i) {
        Request r = elastic("r" + std::to_string(id++), gen.uniform(0.05, 1.0), t,
                            t + gen.uniform_int(1, 8));
        sched.submit(r);
      }
      sched.pull_forward();
      if (sched.current_spare() > kEps) {
        double future = 0.0;
        for (const auto& [rid, adm] : sched.admitted())
          future += sched.link().find_ledger(rid)->total_after(t);
        CHECK(future <= kEps);
      }
      sched.advance();
      REQUIRE(sched.invariants_hold());
    }
  }
}

TEST_CASE("no preemption: transmitted volume never decreases or overshoots") {
  Gen gen(11);
  LinkScheduler sched(1.0);
  std::map<std::string, double> sent_so_far;
  std::map<std::string, Request> all;
  int id = 0;
  for (SlotIndex t = 0; t < 20; ++t) {
    int n = gen.uniform_int(0, 2);
    for (int i = 0; i < n; ++i) {
      Request r = elastic("r" + std::to_string(id++), gen.uniform(0.1, 2.0), t,
                          t + gen.uniform_int(1, 6));
      if (sched.submit(r).accepted) all[r.id] = r;
    }
    sched.pull_forward();
    sched.advance();
    for (const auto& [rid, r] : all) {
      auto it = sched.admitted().find(rid);
      double sent = it != sched.admitted().end() ? it->second.transmitted : r.volume;
      CHECK(sent >= sent_so_far[rid] - kEps);
      CHECK(sent <= r.volume + kEps);
      sent_so_far[rid] = sent;
    }
  }
  // Every accepted request finished by its deadline (none linger past it).
  for (const auto& [rid, adm] : sched.admitted()) CHECK(adm.request.deadline > 20);
}

TEST_CASE("reservation admission mirrors elastic admission") {
  LinkScheduler sched(1.0);
  AdmissionResult r = sched.reserve(reservation("res", 2.0, 0, 4));
  REQUIRE(r.accepted);
  CHECK(r.profile.amount_at(4) == Catch::Approx(1.0));
  CHECK(r.profile.amount_at(3) == Catch::Approx(1.0));
}

TEST_CASE("reservation whose content arrives behaves as elastic afterwards") {
  LinkScheduler sched(1.0);
  REQUIRE(sched.reserve(reservation("res", 2.0, 0, 4)).accepted);
  // Slot 0: content missing; nothing to send.
  CHECK(sched.pull_forward().empty());
  CHECK(sched.advance().sent == Catch::Approx(0.0));
  // Content arrives at t=1: mass can now be pulled and sent.
  REQUIRE(sched.mark_content_available("res"));
  auto moves = sched.pull_forward();
  REQUIRE(moves.size() == 1);
  CHECK(moves[0].amount == Catch::Approx(1.0));
  CHECK(sched.advance().sent == Catch::Approx(1.0));
  sched.pull_forward();
  sched.advance();
  CHECK(sched.admitted().empty());  // finished by deadline
  CHECK(sched.stats().completed == 1);
}

TEST_CASE("unfulfilled reservation expires with full residual restoration") {
  LinkScheduler sched(1.0);
  REQUIRE(sched.reserve(reservation("res", 2.0, 0, 4)).accepted);  // {3:1, 4:1}
  // Slots 0-2: content never arrives. At slot 3 the reservation's mass is due
  // but the remaining window (3,4] cannot hold 2.0, so it is cancelled.
  SlotReport r0 = sched.advance();  // slot 0
  CHECK(r0.cancelled_reservations == 0);
  sched.advance();                  // slot 1
  SlotIndex t = sched.t_now();
  CHECK(t == 2);
  sched.advance();                  // slot 2
  auto moves = sched.pull_forward();  // slot 3: settle happens here
  CHECK(moves.empty());
  SlotReport r3 = sched.advance();
  CHECK(r3.cancelled_reservations == 1);
  CHECK(sched.admitted().empty());
  // All residuals restored.
  CHECK(sched.link().residual_at(5) == Catch::Approx(1.0));
  CHECK(sched.link().conservation_holds());
  CHECK(sched.stats().cancelled_reservations == 1);
}

TEST_CASE("pull skips an unavailable reservation and serves later requests") {
  LinkScheduler sched(1.0);
  REQUIRE(sched.reserve(reservation("res", 1.0, 0, 2)).accepted);  // {2:1}
  REQUIRE(sched.submit(elastic("el", 1.0, 0, 4)).accepted);        // {4:1}
  auto moves = sched.pull_forward();
  // The reservation at slot 2 is skipped (content missing); the elastic mass
  // at slot 4 is fetched instead.
  REQUIRE(moves.size() == 1);
  CHECK(moves[0].id == "el");
  CHECK(moves[0].amount == Catch::Approx(1.0));
  CHECK(sched.invariants_hold());
}

TEST_CASE("skipped reservation mass is pushed toward its deadline when room exists") {
  LinkScheduler sched(1.0);
  // Reservation lands early because later slots are occupied, then those
  // slots free up before the pull: the skipped mass must move later.
  REQUIRE(sched.submit(elastic("el", 1.0, 0, 3)).accepted);       // {3:1}
  REQUIRE(sched.reserve(reservation("res", 1.0, 0, 3)).accepted); // {2:1}
  auto moves = sched.pull_forward();                              // pulls el from 3
  REQUIRE(moves.size() == 1);
  CHECK(moves[0].id == "el");
  // Reservation's mass moved from slot 2 into the freed slot 3.
  CHECK(sched.link().find_ledger("res")->amount_at(3) == Catch::Approx(1.0));
  CHECK(sched.link().find_ledger("res")->amount_at(2) == Catch::Approx(0.0));
  CHECK(sched.invariants_hold());
}

TEST_CASE("theorem 1: prefix load is minimal at every threshold") {
  Gen gen(1234);
  for (int trial = 0; trial < 60; ++trial) {
    LinkScheduler sched(1.0);
    std::vector<OracleItem> admitted;
    auto items = random_admitted_set(gen, 6, 10);
    int id = 0;
    for (const auto& item : items) {
      Request r = elastic("r" + std::to_string(id++), item.volume, 0, item.deadline);
      if (sched.submit(r).accepted) admitted.push_back(item);
    }
    for (SlotIndex threshold = 1; threshold <= 10; ++threshold) {
      double prefix = 0.0;
      for (const auto& [rid, profile] : sched.link().ledger())
        for (const auto& [slot, amount] : profile)
          if (slot <= threshold) prefix += amount;
      auto oracle = lp_min_prefix(admitted, 1.0, 0, threshold);
      REQUIRE(oracle.has_value());
      CHECK(prefix == Catch::Approx(*oracle).margin(1e-9));
    }
  }
}

TEST_CASE("admission matches the joint feasibility oracle through full dynamics") {
  Gen gen(777);
  int checked = 0;
  for (int trial = 0; trial < 40; ++trial) {
    LinkScheduler sched(1.0);
    int id = 0;
    for (SlotIndex t = 0; t < 8; ++t) {
      int n = gen.uniform_int(0, 3);
      for (int i = 0; i < n; ++i) {
        Request r = elastic("r" + std::to_string(id++), gen.uniform(0.1, 1.5), t,
                            t + gen.uniform_int(1, 8));
        std::vector<OracleItem> items;
        for (const auto& [rid, adm] : sched.admitted())
          if (adm.remaining > kEps) items.push_back({adm.remaining, adm.request.deadline});
        items.push_back({r.volume, r.deadline});
        bool oracle = lp_schedule_feasible(items, 1.0, t);
        CHECK(sched.submit(r).accepted == oracle);
        ++checked;
      }
      sched.pull_forward();
      sched.advance();
    }
  }
  CHECK(checked > 200);
}
