#include "dgnpp/ingest.hpp"

#include <algorithm>
#include <cerrno>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <limits>
#include <sstream>
#include <stdexcept>
#include <string_view>
#include <unordered_map>

namespace dgnpp {
namespace {

std::string_view trim(std::string_view s) {
  const auto first = s.find_first_not_of(" \t\r\n");
  if (first == std::string_view::npos) return {};
  const auto last = s.find_last_not_of(" \t\r\n");
  return s.substr(first, last - first + 1);
}

bool parse_double(std::string_view text, double& out) {
  const std::string buf(trim(text));
  if (buf.empty()) return false;
  char* end = nullptr;
  errno = 0;
  out = std::strtod(buf.c_str(), &end);
  return errno == 0 && end == buf.c_str() + buf.size() && std::isfinite(out);
}

bool parse_index(std::string_view text, std::size_t& out) {
  const std::string buf(trim(text));
  if (buf.empty() || buf.front() == '-' || buf.front() == '+') return false;
  char* end = nullptr;
  errno = 0;
  const unsigned long long v = std::strtoull(buf.c_str(), &end, 10);
  if (errno != 0 || end != buf.c_str() + buf.size()) return false;
  out = static_cast<std::size_t>(v);
  return true;
}

class Vocabulary {
 public:
  std::size_t intern(std::string_view label) {
    auto [it, inserted] =
        index_.try_emplace(std::string(label), labels_.size());
    if (inserted) labels_.emplace_back(label);
    return it->second;
  }

  std::vector<std::string> release() { return std::move(labels_); }

 private:
  std::unordered_map<std::string, std::size_t> index_;
  std::vector<std::string> labels_;
};

}  // namespace

double horizon_after(const std::vector<InteractionEvent>& events) {
  double t_max = 0.0;
  for (const auto& e : events) t_max = std::max(t_max, e.timestamp);
  return t_max * (1.0 + 1e-9);
}

IngestResult parse_jodie_csv(std::istream& in) {
  IngestResult result;
  Vocabulary users;
  Vocabulary items;
  std::vector<InteractionEvent> rows;

  std::string line;
  std::size_t line_no = 0;
  if (!std::getline(in, line)) {
    throw ParseError(1, "missing header line");
  }
  ++line_no;

  double previous = -std::numeric_limits<double>::infinity();
  while (std::getline(in, line)) {
    ++line_no;
    if (trim(line).empty()) continue;

    std::string_view rest(line);
    std::string_view fields[3];
    for (int f = 0; f < 3; ++f) {
      const auto comma = rest.find(',');
      if (comma == std::string_view::npos && f < 2) {
        throw ParseError(line_no, "expected at least 3 comma-separated columns");
      }
      fields[f] = rest.substr(0, comma);
      rest = comma == std::string_view::npos ? std::string_view{}
                                              : rest.substr(comma + 1);
    }
    const auto user_label = trim(fields[0]);
    const auto item_label = trim(fields[1]);
    if (user_label.empty() || item_label.empty()) {
      throw ParseError(line_no, "empty user or item id");
    }
    double t = 0.0;
    if (!parse_double(fields[2], t)) {
      throw ParseError(line_no, "timestamp is not a finite number");
    }
    if (t < 0.0) throw ParseError(line_no, "negative timestamp");
    if (t < previous) ++result.unsorted_rows;
    previous = t;

    rows.push_back({users.intern(user_label), items.intern(item_label), t});
  }

  std::stable_sort(rows.begin(), rows.end(),
                   [](const InteractionEvent& a, const InteractionEvent& b) {
                     return a.timestamp < b.timestamp;
                   });

  result.user_labels = users.release();
  result.item_labels = items.release();
  result.stream.num_users = result.user_labels.size();
  result.stream.num_items = result.item_labels.size();
  result.stream.horizon = horizon_after(rows);
  result.stream.events = std::move(rows);
  return result;
}

IngestResult parse_jodie_csv(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open " + path.string());
  return parse_jodie_csv(in);
}

void write_event_file(const EventStream& stream, std::ostream& out) {
  char buf[96];
  for (const auto& e : stream.events) {
    std::snprintf(buf, sizeof(buf), "%zu %zu %.9g\n", e.user, e.item,
                  e.timestamp);
    out << buf;
  }
}

void write_event_file(const EventStream& stream,
                      const std::filesystem::path& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("cannot write " + path.string());
  write_event_file(stream, out);
}

EventStream read_event_file(std::istream& in, std::size_t min_users,
                            std::size_t min_items) {
  EventStream stream;
  std::string line;
  std::size_t line_no = 0;
  double previous = 0.0;
  while (std::getline(in, line)) {
    ++line_no;
    if (trim(line).empty()) continue;
    std::istringstream fields{std::string(trim(line))};
    std::string u, v, t, extra;
    if (!(fields >> u >> v >> t) || (fields >> extra)) {
      throw ParseError(line_no, "expected '<user> <item> <timestamp>'");
    }
    InteractionEvent e;
    if (!parse_index(u, e.user) || !parse_index(v, e.item)) {
      throw ParseError(line_no, "ids must be non-negative integers");
    }
    if (!parse_double(t, e.timestamp) || e.timestamp < 0.0) {
      throw ParseError(line_no, "timestamp must be a non-negative number");
    }
    if (e.timestamp < previous) {
      throw ParseError(line_no, "event file is not sorted by timestamp");
    }
    previous = e.timestamp;
    stream.num_users = std::max(stream.num_users, e.user + 1);
    stream.num_items = std::max(stream.num_items, e.item + 1);
    stream.events.push_back(e);
  }
  stream.num_users = std::max(stream.num_users, min_users);
  stream.num_items = std::max(stream.num_items, min_items);
  stream.horizon = horizon_after(stream.events);
  return stream;
}

EventStream read_event_file(const std::filesystem::path& path,
                            std::size_t min_users, std::size_t min_items) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open " + path.string());
  return read_event_file(in, min_users, min_items);
}

StreamSplit chronological_split(const EventStream& stream, double train_frac,
                                double valid_frac) {
  if (!(train_frac > 0.0) || !(valid_frac >= 0.0) ||
      !(train_frac + valid_frac < 1.0)) {
    throw std::invalid_argument(
        "chronological_split: need 0 < train, 0 <= valid, train + valid < 1");
  }
  const auto n = static_cast<double>(stream.size());
  const auto n_train = static_cast<std::size_t>(std::floor(n * train_frac + 1e-9));
  const auto n_valid = static_cast<std::size_t>(std::floor(n * valid_frac + 1e-9));

  auto slice = [&](std::size_t begin, std::size_t end) {
    EventStream part;
    part.num_users = stream.num_users;
    part.num_items = stream.num_items;
    part.events.assign(stream.events.begin() + begin,
                       stream.events.begin() + end);
    part.horizon = part.events.empty() ? 0.0 : part.events.back().timestamp;
    return part;
  };
  const std::size_t total = stream.size();
  const std::size_t a = std::min(n_train, total);
  const std::size_t b = std::min(a + n_valid, total);
  return {slice(0, a), slice(a, b), slice(b, total)};
}

}  // namespace dgnpp
