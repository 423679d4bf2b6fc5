#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>
#include <vector>

namespace dgnpp {

// One (user, item, timestamp) interaction. Ids are dense indices.
struct InteractionEvent {
  std::size_t user = 0;
  std::size_t item = 0;
  double timestamp = 0.0;

  friend bool operator==(const InteractionEvent&,
                         const InteractionEvent&) = default;
};

// Chronologically ordered interactions over (0, horizon].
struct EventStream {
  std::vector<InteractionEvent> events;
  double horizon = 0.0;
  std::size_t num_users = 0;
  std::size_t num_items = 0;

  std::size_t size() const { return events.size(); }
  bool empty() const { return events.empty(); }

  friend bool operator==(const EventStream&, const EventStream&) = default;
};

// Horizon used for ingested streams: strictly past the last event.
double horizon_after(const std::vector<InteractionEvent>& events);

class ParseError : public std::runtime_error {
 public:
  ParseError(std::size_t line, const std::string& what)
      : std::runtime_error("line " + std::to_string(line) + ": " + what),
        line_(line) {}

  std::size_t line() const { return line_; }

 private:
  std::size_t line_;
};

}  // namespace dgnpp
