#pragma once

#include <string>
#include <variant>
#include <vector>

#include "rtc/infostate.hpp"
#include "rtc/model.hpp"
#include "rtc/rules.hpp"

namespace rtc {

// A complete strategy in belief form. At stage t the encoder looks up the
// belief it currently holds (matched against `beliefs` within kBeliefMergeTol)
// and reads the channel input from `encoder`, which is x-major:
// encoder[x * beliefs.size() + belief_position]. Decoder and memory tables
// are flat over ym_index(y, m, nm).
struct StructuredStage {
  std::vector<BeliefM> beliefs;
  std::vector<int> encoder;
  DecoderRule decoder;
  MemoryRule memory;
};
struct StructuredDesign {
  std::vector<StructuredStage> stages;
};

// A complete strategy in history form. The stage-t encoder table is indexed by
// the full source history x_1..x_t and feedback history yt_1..yt_{t-1},
// chronologically most-significant first:
//   index = (((x_1 * nx + x_2) * nx + ...) * nyt + yt_1) * nyt + ...
// i.e. index = x_hist * nyt^(t-1) + yt_hist with x_hist, yt_hist base-nx and
// base-nyt numerals. Decoder and memory tables are as in StructuredStage.
struct HistoryStage {
  std::vector<int> encoder;
  DecoderRule decoder;
  MemoryRule memory;
};
struct HistoryDesign {
  std::vector<HistoryStage> stages;
};

using Design = std::variant<StructuredDesign, HistoryDesign>;

// Throws DimensionMismatchError unless every table in the design matches the
// instance's alphabet sizes and horizon and every entry is in range.
void check_design_dims(const Instance& inst, const StructuredDesign& d);
void check_design_dims(const Instance& inst, const HistoryDesign& d);
void check_design_dims(const Instance& inst, const Design& d);

Json design_to_json(const Design& d);
Design design_from_json(const Json& doc);
Design load_design(const std::string& path);
void save_design(const Design& d, const std::string& path);

// Match a structured stage's belief table against the support of an encoder
// information state (beliefs compared within kBeliefMergeTol) and repackage
// the stage's encoder table as an EncoderRule on those belief ids. Throws
// BeliefMismatchError if some support belief has no row in the stage table.
EncoderRule bind_encoder(const StructuredStage& stage, const InfoState1& pi1,
                         const BeliefSpace& space);

}  // namespace rtc
