#include "cellvote/records.hpp"

#include <fstream>
#include <istream>
#include <ostream>

#include "cellvote/error.hpp"

namespace cellvote {

namespace {

std::string_view trim(std::string_view s) {
  while (!s.empty() && (s.front() == ' ' || s.front() == '\t')) s.remove_prefix(1);
  while (!s.empty() && (s.back() == ' ' || s.back() == '\t' || s.back() == '\r')) s.remove_suffix(1);
  return s;
}

[[noreturn]] void parse_error(std::size_t line_no, const std::string& what) {
  throw Error(ErrorKind::ParseError, "line " + std::to_string(line_no) + ": " + what);
}

}  // namespace

std::vector<std::string> split_csv_line(std::string_view line) {
  std::vector<std::string> fields;
  std::size_t start = 0;
  while (true) {
    const std::size_t comma = line.find(',', start);
    fields.emplace_back(trim(line.substr(start, comma == std::string_view::npos ? line.npos : comma - start)));
    if (comma == std::string_view::npos) break;
    start = comma + 1;
  }
  return fields;
}

void validate_identifier(std::string_view id, std::string_view what) {
  if (id.empty()) throw Error(ErrorKind::InvalidArgument, std::string(what) + " must not be empty");
  if (id.find_first_of(",\"\n\r") != std::string_view::npos)
    throw Error(ErrorKind::InvalidArgument,
                std::string(what) + " '" + std::string(id) + "' contains a reserved character");
}

void write_vote_header(std::ostream& out) { out << kVoteHeader << '\n'; }

void write_vote(std::ostream& out, const Vote& vote) {
  validate_identifier(vote.item_id, "item_id");
  validate_identifier(vote.worker_id, "worker_id");
  out << vote.item_id << ',' << vote.worker_id << ',' << to_string(vote.label) << ','
      << format_iso8601(vote.submitted_at) << '\n';
}

void write_votes(std::ostream& out, std::span<const Vote> votes) {
  write_vote_header(out);
  for (const Vote& v : votes) write_vote(out, v);
}

std::vector<Vote> read_votes(std::istream& in) {
  std::vector<Vote> votes;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    const std::string_view view = trim(line);
    if (view.empty()) continue;
    if (line_no == 1 && view == kVoteHeader) continue;
    const auto fields = split_csv_line(view);
    if (fields.size() != 4)
      parse_error(line_no, "expected 4 fields, found " + std::to_string(fields.size()));
    if (fields[0].empty() || fields[1].empty()) parse_error(line_no, "empty identifier");
    try {
      votes.push_back(Vote{fields[1], fields[0], parse_cell_class(fields[2]), parse_iso8601(fields[3])});
    } catch (const Error& e) {
      parse_error(line_no, e.what());
    }
  }
  return votes;
}

std::vector<Vote> read_votes_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw Error(ErrorKind::MissingFile, "cannot open votes file '" + path + "'");
  return read_votes(in);
}

void write_consensus(std::ostream& out, std::span<const ConsensusResult> results) {
  out << kConsensusHeader << '\n';
  for (const ConsensusResult& r : results) {
    out << r.item_id << ',';
    if (r.outcome)
      out << to_string(r.outcome->label) << ',' << r.outcome->agreement;
    else
      out << (r.expired ? "expired" : "na") << ",0";
    out << ',' << r.pattern.to_string() << '\n';
  }
}

}  // namespace cellvote
