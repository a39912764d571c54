#pragma once

#include <filesystem>
#include <string>
#include <vector>

#include "csgaze/common.hpp"
#include "csgaze/core/types.hpp"

namespace csgaze {

// Line-delimited, tab-separated manifests with a fixed header row.  Text
// fields are escaped (\\ \t \n \r); numbers are written in shortest
// round-trip form, so load(write(x)) == x exactly and the writer output is
// canonical byte-for-byte.

namespace detail {

inline const char* kDyadHeader = "id\timage\tpx0\tpy0\tpx1\tpy1\tax0\tay0\tax1\tay1\tlabel\tlaeo";
inline const char* kGazeFollowHeader = "id\timage\tx0\ty0\tx1\ty1\tgaze_x\tgaze_y";

inline std::string where(const std::filesystem::path& path, std::size_t line_no) {
  return path.string() + ":" + std::to_string(line_no);
}

}  // namespace detail

inline std::string format_dyad_line(const DyadSample& s) {
  std::string out = escape_field(s.id);
  out += '\t';
  out += escape_field(s.image_path);
  for (double v : {s.principal.x0, s.principal.y0, s.principal.x1, s.principal.y1, s.associate.x0,
                   s.associate.y0, s.associate.x1, s.associate.y1}) {
    out += '\t';
    out += fmt_f64(v);
  }
  out += '\t';
  out += to_string(s.label);
  out += '\t';
  out += s.binary_label < 0 ? "-" : std::to_string(s.binary_label);
  return out;
}

inline void save_manifest(const std::vector<DyadSample>& samples,
                          const std::filesystem::path& path) {
  std::string text = detail::kDyadHeader;
  text += '\n';
  for (const auto& s : samples) {
    s.validate();
    text += format_dyad_line(s);
    text += '\n';
  }
  write_text_file(path, text);
}

inline std::vector<DyadSample> load_manifest(const std::filesystem::path& path) {
  auto lines = split_lines(read_text_file(path));
  if (lines.empty()) raise("manifest is empty: " + path.string());
  if (lines[0] != detail::kDyadHeader)
    raise("bad manifest header at " + detail::where(path, 1) + " (want '" +
          std::string(detail::kDyadHeader) + "')");
  std::vector<DyadSample> out;
  out.reserve(lines.size() - 1);
  for (std::size_t i = 1; i < lines.size(); ++i) {
    const std::string& ln = lines[i];
    std::string at = detail::where(path, i + 1);
    auto fields = split_tabs(ln);
    if (fields.size() != 12)
      raise("malformed manifest line at " + at + ": expected 12 fields, got " +
            std::to_string(fields.size()));
    DyadSample s;
    s.id = unescape_field(fields[0], "id at " + at);
    s.image_path = unescape_field(fields[1], "image at " + at);
    double* nums[8] = {&s.principal.x0, &s.principal.y0, &s.principal.x1, &s.principal.y1,
                       &s.associate.x0, &s.associate.y0, &s.associate.x1, &s.associate.y1};
    for (int k = 0; k < 8; ++k) *nums[k] = parse_f64(fields[2 + k], "box coordinate at " + at);
    s.label = parse_gaze_class(fields[10]);
    s.binary_label = fields[11] == "-" ? -1 : static_cast<int>(parse_i64(fields[11], "laeo at " + at));
    try {
      s.validate();
    } catch (const Error& e) {
      raise(std::string(e.what()) + " (at " + at + ")");
    }
    out.push_back(std::move(s));
  }
  return out;
}

inline std::string format_gazefollow_line(const GazeFollowSample& s) {
  std::string out = escape_field(s.id);
  out += '\t';
  out += escape_field(s.image_path);
  for (double v : {s.head.x0, s.head.y0, s.head.x1, s.head.y1, s.gaze_x, s.gaze_y}) {
    out += '\t';
    out += fmt_f64(v);
  }
  return out;
}

inline void save_gazefollow_manifest(const std::vector<GazeFollowSample>& samples,
                                     const std::filesystem::path& path) {
  std::string text = detail::kGazeFollowHeader;
  text += '\n';
  for (const auto& s : samples) {
    s.validate();
    text += format_gazefollow_line(s);
    text += '\n';
  }
  write_text_file(path, text);
}

inline std::vector<GazeFollowSample> load_gazefollow_manifest(const std::filesystem::path& path) {
  auto lines = split_lines(read_text_file(path));
  if (lines.empty()) raise("gazefollow manifest is empty: " + path.string());
  if (lines[0] != detail::kGazeFollowHeader)
    raise("bad gazefollow header at " + detail::where(path, 1));
  std::vector<GazeFollowSample> out;
  out.reserve(lines.size() - 1);
  for (std::size_t i = 1; i < lines.size(); ++i) {
    std::string at = detail::where(path, i + 1);
    auto fields = split_tabs(lines[i]);
    if (fields.size() != 8)
      raise("malformed gazefollow line at " + at + ": expected 8 fields, got " +
            std::to_string(fields.size()));
    GazeFollowSample s;
    s.id = unescape_field(fields[0], "id at " + at);
    s.image_path = unescape_field(fields[1], "image at " + at);
    double* nums[6] = {&s.head.x0, &s.head.y0, &s.head.x1, &s.head.y1, &s.gaze_x, &s.gaze_y};
    for (int k = 0; k < 6; ++k) *nums[k] = parse_f64(fields[2 + k], "field at " + at);
    try {
      s.validate();
    } catch (const Error& e) {
      raise(std::string(e.what()) + " (at " + at + ")");
    }
    out.push_back(std::move(s));
  }
  return out;
}

}  // namespace csgaze
