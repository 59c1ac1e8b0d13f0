#pragma once

#include <filesystem>
#include <string>
#include <vector>

#include "ink2tex/ink.hpp"
#include "ink2tex/preprocess.hpp"

namespace ink2tex {

/// One preprocessed training or test item.
struct Sample {
  std::string id;
  Ink ink;  // normalized and resampled
  FeatureSequence features;
  std::vector<std::string> label;  // empty when unlabeled
};

/// Normalizes, resamples and featurizes a raw trajectory.
Sample make_sample(std::string id, const Ink& raw, double spacing = kDefaultSpacing);

/// Raw inputs of a directory: every *.inkml and *.points file, sorted by file name. The id
/// is the file stem.
std::vector<std::pair<std::string, Ink>> read_raw_directory(const std::filesystem::path& dir);

/// Writes `<id>.points` files (with #label lines) for a raw corpus.
void write_raw_directory(const std::filesystem::path& dir, const std::vector<std::pair<std::string, Ink>>& inks);

/// Archive layout:
///   manifest.tsv          id <TAB> features/<id>.feat <TAB> label tokens
///   features/<id>.feat    feature rows
///   ink/<id>.points       preprocessed trajectory
void write_dataset(const std::filesystem::path& dir, const std::vector<Sample>& samples);
std::vector<Sample> read_dataset(const std::filesystem::path& dir);

/// Transcription files: one `id <TAB> tokens` line per expression. Extra columns are
/// ignored.
struct Transcription {
  std::string id;
  std::vector<std::string> tokens;
};
std::vector<Transcription> parse_transcriptions(std::string_view text);
std::string write_transcriptions(const std::vector<Transcription>& items);

std::string read_file(const std::filesystem::path& path);
void write_file(const std::filesystem::path& path, std::string_view bytes);

}  // namespace ink2tex
