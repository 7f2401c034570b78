#pragma once

// Line-delimited record formats shared by the CLI, the orchestrator and the
// simulator. Layouts are documented in docs/FORMATS.md.

#include <iosfwd>
#include <span>
#include <string>
#include <vector>

#include "cellvote/annotation.hpp"

namespace cellvote {

inline constexpr std::string_view kVoteHeader = "item_id,worker_id,label,timestamp";
inline constexpr std::string_view kConsensusHeader = "item_id,outcome,agreement,pattern";

void write_vote_header(std::ostream& out);
void write_vote(std::ostream& out, const Vote& vote);
void write_votes(std::ostream& out, std::span<const Vote> votes);

// Header line is optional; blank lines are skipped. Throws Error(ParseError)
// naming the 1-based line number.
std::vector<Vote> read_votes(std::istream& in);
std::vector<Vote> read_votes_file(const std::string& path);

void write_consensus(std::ostream& out, std::span<const ConsensusResult> results);

// Splits one CSV line on commas. Fields may not contain commas or quotes;
// identifiers are validated on write.
std::vector<std::string> split_csv_line(std::string_view line);

// Throws Error(InvalidArgument) for identifiers that would break the
// line format (empty, commas, quotes, newlines).
void validate_identifier(std::string_view id, std::string_view what);

}  // namespace cellvote
