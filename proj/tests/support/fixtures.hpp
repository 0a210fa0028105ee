#pragma once

#include <array>
#include <cstddef>
#include <string>
#include <vector>

#include "qwerty/evalkit.hpp"
#include "qwerty/rating.hpp"

namespace qwerty::testing {

// The three case-study scenes, heading plus action line.
inline constexpr const char* kWarehouseScene =
    "INT. ABANDONED WAREHOUSE - NIGHT\n"
    "\n"
    "Viktor grabs the metal pipe and swings it at Dmitri's head. Blood sprays across the concrete "
    "floor. Dmitri collapses, motionless.";
inline constexpr const char* kOfficeScene =
    "INT. OFFICE - DAY\n"
    "\n"
    "Marina's dreams were crushed when the boss announced layoffs. She felt like her world was ending.";
inline constexpr const char* kVodkaScene =
    "INT. HISTORICAL SETTING - 1945\n"
    "\n"
    "The soldiers share a bottle of vodka, celebrating victory. Ivan takes a long drink.";

inline std::string case_study_document() {
  return std::string(kWarehouseScene) + "\n\n" + kOfficeScene + "\n\n" + kVodkaScene + "\n";
}

// Document-level test set as (truth, predicted), one pair per confusion cell.
inline std::vector<eval::RatingPair> reference_rating_pairs() {
  // counts[truth][predicted]
  constexpr std::array<std::array<int, 5>, 5> counts{{
      {3, 0, 0, 0, 0},
      {0, 2, 0, 0, 0},
      {0, 1, 4, 0, 0},
      {0, 0, 1, 2, 0},
      {0, 0, 0, 1, 1},
  }};
  std::vector<eval::RatingPair> pairs;
  for (std::size_t t = 0; t < 5; ++t) {
    for (std::size_t p = 0; p < 5; ++p) {
      for (int k = 0; k < counts[t][p]; ++k) pairs.push_back({kAllRatings[t], kAllRatings[p]});
    }
  }
  return pairs;
}

// Plain-text screenplay with `total` scenes of neutral action. The listed
// scenes additionally carry one flagged line each, one category per scene.
struct FlaggedScene {
  std::size_t scene;
  std::string line;
};

inline std::string neutral_document(std::size_t total, const std::vector<FlaggedScene>& flagged) {
  static const char* const kNeutral[] = {
      "Anna opens the window and looks down at the street.",
      "Rain taps against the glass. Somewhere a radio plays an old song.",
      "Olga sorts a stack of papers into three neat piles.",
      "Peter checks his watch, then checks it again.",
  };
  std::string out;
  for (std::size_t i = 0; i < total; ++i) {
    out += "INT. ROOM " + std::to_string(i + 1) + " - DAY\n\n";
    out += kNeutral[i % 4];
    out += '\n';
    for (const FlaggedScene& f : flagged) {
      if (f.scene == i) out += f.line + '\n';
    }
    out += '\n';
  }
  return out;
}

// 394 scenes; 12 flagged: violence 5, profanity 3, sexual_content 2,
// drugs_alcohol 1, fear_elements 1; most restrictive scene is 16+.
inline std::vector<FlaggedScene> golden_flags() {
  return {
      {10, "Viktor threatens to murder the guard."},   // violence explicit
      {40, "The brothers fight in the yard."},          // violence moderate
      {75, "He punches the wall twice."},               // violence moderate
      {120, "A stranger shoves Anna aside."},            // violence mild
      {160, "The witness describes the murder."},       // violence explicit
      {200, "Gleb calls him a bastard."},               // profanity mild
      {230, "What a load of shit, she says."},          // profanity mild
      {260, "Ivan mutters: bitch."},                    // profanity mild
      {290, "Sophia flirts with the bartender."},       // sexual mild
      {310, "A naked mannequin stands in the window."}, // sexual moderate
      {340, "Olga pours vodka for the guests."},        // drugs moderate
      {370, "The children are afraid of the cellar."},  // fear mild
  };
}

}  // namespace qwerty::testing
