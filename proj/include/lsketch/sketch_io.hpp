#pragma once

#include <array>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <istream>
#include <ostream>
#include <string>
#include <utility>
#include <vector>

#include <json.hpp>

#include "lsketch/errors.hpp"
#include "lsketch/io.hpp"
#include "lsketch/sketch.hpp"

namespace lsketch::io {

// Binary sketch container:
//   "SKSP", u16 version, u8 kind, u8 field count,
//   then per field: u8 field tag followed by one rawbin matrix block.
inline constexpr std::array<char, 4> kSketchMagic{'S', 'K', 'S', 'P'};
inline constexpr std::uint16_t kSketchVersion = 1;

enum class SketchField : std::uint8_t { SBase = 0, Mask = 1, Mu = 2, SigmaVar = 3 };

namespace detail {

inline const char* field_name(SketchField f) {
  switch (f) {
    case SketchField::SBase: return "s_base";
    case SketchField::Mask: return "mask";
    case SketchField::Mu: return "mu";
    case SketchField::SigmaVar: return "sigma_var";
  }
  return "?";
}

inline std::optional<Matrix>& field_ref(SketchSpec& s, SketchField f) {
  switch (f) {
    case SketchField::SBase: return s.s_base;
    case SketchField::Mask: return s.mask;
    case SketchField::Mu: return s.mu;
    case SketchField::SigmaVar: return s.sigma_var;
  }
  throw IoError("bad sketch field tag");
}

inline std::vector<std::pair<SketchField, const Matrix*>> fields_of(const SketchSpec& s) {
  std::vector<std::pair<SketchField, const Matrix*>> out;
  if (s.s_base) out.emplace_back(SketchField::SBase, &*s.s_base);
  if (s.mask) out.emplace_back(SketchField::Mask, &*s.mask);
  if (s.mu) out.emplace_back(SketchField::Mu, &*s.mu);
  if (s.sigma_var) out.emplace_back(SketchField::SigmaVar, &*s.sigma_var);
  return out;
}

}  // namespace detail

inline void write_sketch(std::ostream& os, const SketchSpec& spec) {
  spec.validate();
  const auto fields = detail::fields_of(spec);
  os.write(kSketchMagic.data(), kSketchMagic.size());
  detail::put_le<std::uint16_t>(os, kSketchVersion);
  detail::put_le<std::uint8_t>(os, static_cast<std::uint8_t>(spec.kind));
  detail::put_le<std::uint8_t>(os, static_cast<std::uint8_t>(fields.size()));
  for (const auto& [tag, m] : fields) {
    detail::put_le<std::uint8_t>(os, static_cast<std::uint8_t>(tag));
    write_rawbin(os, *m);
  }
  if (!os) throw IoError("write_sketch: stream error");
}

inline SketchSpec read_sketch(std::istream& is, const std::string& what = "sketch") {
  std::array<char, 4> magic{};
  if (!is.read(magic.data(), magic.size()) || magic != kSketchMagic) throw IoError(what + ": bad magic");
  const auto version = detail::get_le<std::uint16_t>(is, what);
  if (version != kSketchVersion) throw IoError(what + ": unsupported version " + std::to_string(version));
  const auto kind = detail::get_le<std::uint8_t>(is, what);
  if (kind > static_cast<std::uint8_t>(SketchKind::StochasticMasked)) throw IoError(what + ": bad kind");
  const auto count = detail::get_le<std::uint8_t>(is, what);
  SketchSpec spec;
  spec.kind = static_cast<SketchKind>(kind);
  for (unsigned i = 0; i < count; ++i) {
    const auto tag = detail::get_le<std::uint8_t>(is, what);
    if (tag > static_cast<std::uint8_t>(SketchField::SigmaVar)) throw IoError(what + ": bad field tag");
    auto& slot = detail::field_ref(spec, static_cast<SketchField>(tag));
    if (slot) throw IoError(what + ": duplicate field");
    slot = read_rawbin(is, what);
  }
  try {
    spec.validate();
  } catch (const Error& e) {
    throw IoError(what + ": " + e.what());
  }
  return spec;
}

inline void save_sketch(const std::filesystem::path& p, const SketchSpec& spec) {
  std::ofstream os(p, std::ios::binary);
  if (!os) throw IoError("cannot open " + p.string() + " for writing");
  write_sketch(os, spec);
}

inline SketchSpec load_sketch(const std::filesystem::path& p) {
  std::ifstream is(p, std::ios::binary);
  if (!is) throw IoError("cannot open " + p.string());
  return read_sketch(is, p.string());
}

/// {"kind": ..., "rows": m, "cols": n, "<field>": [row-major values], ...}
inline nlohmann::json sketch_to_json(const SketchSpec& spec) {
  spec.validate();
  nlohmann::json j;
  j["kind"] = kind_name(spec.kind);
  j["rows"] = spec.rows();
  j["cols"] = spec.cols();
  for (const auto& [tag, m] : detail::fields_of(spec)) j[detail::field_name(tag)] = m->storage();
  return j;
}

inline SketchSpec sketch_from_json(const nlohmann::json& j) {
  try {
    SketchSpec spec;
    spec.kind = kind_from_name(j.at("kind").get<std::string>());
    const auto rows = j.at("rows").get<std::size_t>();
    const auto cols = j.at("cols").get<std::size_t>();
    for (auto tag : {SketchField::SBase, SketchField::Mask, SketchField::Mu, SketchField::SigmaVar}) {
      const char* name = detail::field_name(tag);
      if (j.contains(name)) detail::field_ref(spec, tag) = Matrix(rows, cols, j.at(name).get<std::vector<double>>());
    }
    spec.validate();
    return spec;
  } catch (const nlohmann::json::exception& e) {
    throw IoError(std::string("sketch json: ") + e.what());
  }
}

}  // namespace lsketch::io
