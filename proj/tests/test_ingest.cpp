#include <doctest.h>

#include <algorithm>
#include <filesystem>
#include <fstream>
#include <random>
#include <sstream>

#include "dgnpp/ingest.hpp"

using namespace dgnpp;

namespace {

IngestResult parse(const std::string& text) {
  std::istringstream in(text);
  return parse_jodie_csv(in);
}

EventStream stream_of(std::size_t n) {
  EventStream s;
  for (std::size_t i = 0; i < n; ++i) {
    s.events.push_back({i % 3, i % 2, static_cast<double>(i + 1)});
  }
  s.num_users = 3;
  s.num_items = 2;
  s.horizon = horizon_after(s.events);
  return s;
}

}  // namespace

TEST_CASE("first-appearance re-indexing") {
  const auto r = parse("user_id,item_id,timestamp\na,x,1.0\nb,x,2.0\na,y,3.0\n");
  CHECK(r.stream.num_users == 2);
  CHECK(r.stream.num_items == 2);
  const std::vector<InteractionEvent> want = {{0, 0, 1.0}, {1, 0, 2.0}, {0, 1, 3.0}};
  CHECK(r.stream.events == want);
  CHECK(r.unsorted_rows == 0);
  CHECK(r.user_labels == std::vector<std::string>{"a", "b"});
  CHECK(r.item_labels == std::vector<std::string>{"x", "y"});
}

TEST_CASE("header only gives an empty stream") {
  const auto r = parse("user_id,item_id,timestamp,state_label\n");
  CHECK(r.stream.empty());
  CHECK(r.stream.num_users == 0);
  CHECK(r.stream.num_items == 0);
}

TEST_CASE("shuffled timestamps are sorted with a warning count") {
  const auto r = parse("u,i,t\na,x,5.0\nb,y,1.0\nc,z,3.0\n");
  std::vector<double> times;
  for (const auto& e : r.stream.events) times.push_back(e.timestamp);
  std::vector<double> oracle = {5.0, 1.0, 3.0};
  std::sort(oracle.begin(), oracle.end());
  CHECK(times == oracle);
  CHECK(r.unsorted_rows == 1);
}

TEST_CASE("equal timestamps keep file order") {
  const auto r = parse("u,i,t\na,x,2\nb,y,1\nc,z,2\nd,w,1\n");
  const std::vector<std::size_t> users = {1, 3, 0, 2};
  for (std::size_t k = 0; k < users.size(); ++k) CHECK(r.stream.events[k].user == users[k]);
}

TEST_CASE("extra columns are ignored") {
  const auto plain = parse("user_id,item_id,timestamp\n7,3,0.5\n8,3,1.5\n");
  const auto extra = parse(
      "user_id,item_id,timestamp,state_label,f1,f2\n7,3,0.5,0,0.1,0.2\n8,3,1.5,1,0.3,0.4\n");
  CHECK(plain.stream == extra.stream);
}

TEST_CASE("malformed rows name their line") {
  CHECK_THROWS_WITH_AS(parse("u,i,t\na,x,1\nb,y\n"), "line 3: expected at least 3 comma-separated columns",
                       ParseError);
  CHECK_THROWS_AS(parse("u,i,t\na,x,abc\n"), ParseError);
  CHECK_THROWS_AS(parse("u,i,t\na,x,-1\n"), ParseError);
  CHECK_THROWS_AS(parse(""), ParseError);
  try {
    parse("u,i,t\na,x,1\na,x,2\na,x,nan\n");
    FAIL("expected a parse error");
  } catch (const ParseError& e) {
    CHECK(e.line() == 4);
  }
}

TEST_CASE("horizon lies strictly past the last event") {
  const auto r = parse("u,i,t\na,x,1\nb,x,4\n");
  CHECK(r.stream.horizon > 4.0);
  CHECK(r.stream.horizon == doctest::Approx(4.0 * (1 + 1e-9)).epsilon(1e-15));
}

TEST_CASE("canonical round trip") {
  const auto r = parse("u,i,t\na,x,0.25\nb,y,1.5\na,y,2.75\nc,x,1e3\n");
  std::stringstream buf;
  write_event_file(r.stream, buf);
  CHECK(buf.str() == "0 0 0.25\n1 1 1.5\n0 1 2.75\n2 0 1000\n");
  const EventStream back = read_event_file(buf);
  CHECK(back == r.stream);
  std::stringstream again;
  write_event_file(back, again);
  CHECK(again.str() == buf.str());
}

TEST_CASE("event file reader validates") {
  std::istringstream unsorted("0 0 2\n0 1 1\n");
  CHECK_THROWS_AS(read_event_file(unsorted), ParseError);
  std::istringstream bad("0 x 1\n");
  CHECK_THROWS_AS(read_event_file(bad), ParseError);
  std::istringstream ok("0 0 1\n");
  const auto s = read_event_file(ok, 5, 7);
  CHECK(s.num_users == 5);
  CHECK(s.num_items == 7);
  CHECK_THROWS(read_event_file(std::filesystem::path("/nonexistent/events.txt")));
}

TEST_CASE("re-indexing is a bijection") {
  std::mt19937 rng(7);
  std::ostringstream csv;
  csv << "u,i,t\n";
  std::vector<std::pair<std::string, std::string>> rows;
  for (int k = 0; k < 200; ++k) {
    rows.emplace_back("user" + std::to_string(rng() % 17), "item" + std::to_string(rng() % 11));
    csv << rows.back().first << ',' << rows.back().second << ',' << k << '\n';
  }
  const auto r = parse(csv.str());
  REQUIRE(r.stream.size() == rows.size());
  for (std::size_t k = 0; k < rows.size(); ++k) {
    CHECK(r.user_labels[r.stream.events[k].user] == rows[k].first);
    CHECK(r.item_labels[r.stream.events[k].item] == rows[k].second);
  }
  auto labels = r.user_labels;
  std::sort(labels.begin(), labels.end());
  CHECK(std::adjacent_find(labels.begin(), labels.end()) == labels.end());
}

TEST_CASE("split sizes") {
  const auto s = stream_of(10);
  auto a = chronological_split(s, 0.8, 0.1);
  CHECK(a.train.size() == 8);
  CHECK(a.valid.size() == 1);
  CHECK(a.test.size() == 1);
  auto b = chronological_split(s, 0.5, 0.0);
  CHECK(b.train.size() == 5);
  CHECK(b.valid.size() == 0);
  CHECK(b.test.size() == 5);
  CHECK(a.train.horizon == 8.0);
  CHECK(a.test.horizon == 10.0);
  CHECK(a.test.num_users == 3);
  CHECK(a.valid.num_items == 2);
}

TEST_CASE("split is an order-preserving partition") {
  for (std::size_t n : {0u, 1u, 7u, 33u, 100u}) {
    const auto s = stream_of(n);
    for (double tf : {0.1, 0.5, 0.7}) {
      for (double vf : {0.0, 0.15, 0.2}) {
        const auto p = chronological_split(s, tf, vf);
        std::vector<InteractionEvent> joined = p.train.events;
        joined.insert(joined.end(), p.valid.events.begin(), p.valid.events.end());
        joined.insert(joined.end(), p.test.events.begin(), p.test.events.end());
        CHECK(joined == s.events);
      }
    }
  }
}

TEST_CASE("split rejects bad fractions") {
  const auto s = stream_of(10);
  CHECK_THROWS_AS(chronological_split(s, 0.0, 0.1), std::invalid_argument);
  CHECK_THROWS_AS(chronological_split(s, 0.5, -0.1), std::invalid_argument);
  CHECK_THROWS_AS(chronological_split(s, 0.6, 0.4), std::invalid_argument);
}
