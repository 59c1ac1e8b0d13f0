#include "ink2tex/dataset.hpp"

#include <algorithm>
#include <fstream>
#include <iterator>
#include <set>
#include <sstream>

#include "ink2tex/errors.hpp"

namespace ink2tex {
namespace fs = std::filesystem;
namespace {

std::vector<std::string_view> split_tabs(std::string_view line) {
  std::vector<std::string_view> out;
  std::size_t start = 0;
  for (;;) {
    const auto tab = line.find('\t', start);
    out.push_back(line.substr(start, tab == std::string_view::npos ? std::string_view::npos : tab - start));
    if (tab == std::string_view::npos) return out;
    start = tab + 1;
  }
}

std::string join(const std::vector<std::string>& tokens) {
  std::string out;
  for (const auto& t : tokens) {
    if (!out.empty()) out += ' ';
    out += t;
  }
  return out;
}

void check_id(const std::string& id) {
  if (id.empty() || id.find_first_of("\t\n/\\") != std::string::npos) {
    throw FormatError("invalid sample id '" + id + "'");
  }
}

}  // namespace

std::string read_file(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error("cannot open " + path.string());
  return {std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
}

void write_file(const fs::path& path, std::string_view bytes) {
  if (path.has_parent_path()) fs::create_directories(path.parent_path());
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  out.write(bytes.data(), static_cast<std::streamsize>(bytes.size()));
  if (!out) throw Error("cannot write " + path.string());
}

Sample make_sample(std::string id, const Ink& raw, double spacing) {
  Sample s;
  s.id = std::move(id);
  s.ink = resample(normalize(raw), spacing);
  s.features = extract_features(s.ink);
  s.label = raw.label.value_or(std::vector<std::string>{});
  s.ink.label = raw.label;
  return s;
}

std::vector<std::pair<std::string, Ink>> read_raw_directory(const fs::path& dir) {
  if (!fs::is_directory(dir)) throw Error(dir.string() + " is not a directory");
  std::vector<fs::path> files;
  for (const auto& entry : fs::directory_iterator(dir)) {
    const auto ext = entry.path().extension();
    if (entry.is_regular_file() && (ext == ".inkml" || ext == ".points")) files.push_back(entry.path());
  }
  std::sort(files.begin(), files.end());
  std::vector<std::pair<std::string, Ink>> out;
  for (const auto& f : files) {
    const auto text = read_file(f);
    try {
      out.emplace_back(f.stem().string(), f.extension() == ".inkml" ? parse_inkml(text) : parse_points(text));
    } catch (const Error& e) {
      throw FormatError(f.string() + ": " + e.what());
    }
  }
  if (out.empty()) throw EmptyInputError("no .inkml or .points files in " + dir.string());
  return out;
}

void write_raw_directory(const fs::path& dir, const std::vector<std::pair<std::string, Ink>>& inks) {
  fs::create_directories(dir);
  for (const auto& [id, ink] : inks) {
    check_id(id);
    write_file(dir / (id + ".points"), write_points(ink));
  }
}

void write_dataset(const fs::path& dir, const std::vector<Sample>& samples) {
  fs::create_directories(dir / "features");
  fs::create_directories(dir / "ink");
  std::string manifest;
  std::set<std::string> seen;
  for (const auto& s : samples) {
    check_id(s.id);
    if (!seen.insert(s.id).second) throw FormatError("duplicate sample id '" + s.id + "'");
    const std::string feat = "features/" + s.id + ".feat";
    write_file(dir / feat, write_features(s.features));
    write_file(dir / "ink" / (s.id + ".points"), write_points(s.ink));
    manifest += s.id + '\t' + feat + '\t' + join(s.label) + '\n';
  }
  write_file(dir / "manifest.tsv", manifest);
}

std::vector<Sample> read_dataset(const fs::path& dir) {
  const auto manifest = read_file(dir / "manifest.tsv");
  std::vector<Sample> out;
  std::istringstream lines(manifest);
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(lines, line)) {
    ++line_no;
    if (line.empty()) continue;
    const auto cols = split_tabs(line);
    if (cols.size() < 3) throw FormatError("manifest.tsv: expected 3 tab-separated columns", line_no);
    Sample s;
    s.id = std::string(cols[0]);
    try {
      s.features = parse_features(read_file(dir / std::string(cols[1])));
    } catch (const FormatError& e) {
      throw FormatError(std::string(cols[1]) + ": " + e.what());
    }
    s.label = tokenize(cols[2]);
    const auto ink_path = dir / "ink" / (s.id + ".points");
    if (fs::exists(ink_path)) s.ink = parse_points(read_file(ink_path));
    out.push_back(std::move(s));
  }
  if (out.empty()) throw EmptyInputError("dataset " + dir.string() + " has no samples");
  return out;
}

std::vector<Transcription> parse_transcriptions(std::string_view text) {
  std::vector<Transcription> out;
  std::set<std::string> seen;
  std::size_t line_no = 0;
  std::size_t start = 0;
  while (start <= text.size()) {
    const auto nl = text.find('\n', start);
    auto line = text.substr(start, nl == std::string_view::npos ? std::string_view::npos : nl - start);
    start = nl == std::string_view::npos ? text.size() + 1 : nl + 1;
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.remove_suffix(1);
    if (line.empty()) continue;
    const auto cols = split_tabs(line);
    if (cols.size() < 2) throw FormatError("expected 'id<TAB>tokens'", line_no);
    Transcription t{std::string(cols[0]), tokenize(cols[1])};
    if (!seen.insert(t.id).second) throw FormatError("duplicate id '" + t.id + "'", line_no);
    out.push_back(std::move(t));
  }
  return out;
}

std::string write_transcriptions(const std::vector<Transcription>& items) {
  std::string out;
  for (const auto& t : items) out += t.id + '\t' + join(t.tokens) + '\n';
  return out;
}

}  // namespace ink2tex
