#pragma once

#include <cstddef>
#include <filesystem>
#include <iosfwd>
#include <string>
#include <vector>

#include "dgnpp/events.hpp"

namespace dgnpp {

struct IngestResult {
  EventStream stream;
  // Rows whose timestamp was smaller than the preceding row's.
  std::size_t unsorted_rows = 0;
  // Original ids in dense-id order (first appearance in the file).
  std::vector<std::string> user_labels;
  std::vector<std::string> item_labels;
};

// Reads a JODIE-style CSV: header line, then user_id,item_id,timestamp[,...].
// Extra columns (state label, features) are ignored. Throws ParseError.
IngestResult parse_jodie_csv(const std::filesystem::path& path);
IngestResult parse_jodie_csv(std::istream& in);

// Canonical event file: "<user> <item> <timestamp>" per line, %.9g times.
void write_event_file(const EventStream& stream, std::ostream& out);
void write_event_file(const EventStream& stream,
                      const std::filesystem::path& path);

// Vocabulary sizes are max id + 1, raised to the given minimums.
EventStream read_event_file(std::istream& in, std::size_t min_users = 0,
                            std::size_t min_items = 0);
EventStream read_event_file(const std::filesystem::path& path,
                            std::size_t min_users = 0,
                            std::size_t min_items = 0);

struct StreamSplit {
  EventStream train;
  EventStream valid;
  EventStream test;
};

// Splits by event count at chronological boundaries. Vocabularies are
// shared; each part's horizon is its own last timestamp.
StreamSplit chronological_split(const EventStream& stream, double train_frac,
                                double valid_frac);

}  // namespace dgnpp
