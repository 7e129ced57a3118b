#pragma once

#include "avrsafe/mdp.hpp"

#include <json.hpp>

#include <filesystem>
#include <iosfwd>
#include <string>

namespace avrsafe {

// Binary MDP dump. All integers are little-endian.
//
//   offset  size  content
//   0       8     magic "AVRSMDP1"
//   8       8     u64 header length H
//   16      H     UTF-8 JSON header
//   16+H    20*N  records (s:u32, a:u32, next:u32, p:f64), sorted by (s, a, next)
//
// The header carries: format, version, states, actions, records (= N),
// constraint_rle {first: bool, runs: [u64...]}, initial_weights [f64...] and
// a free-form "metadata" object (grid description, provenance).
inline constexpr char kMdpMagic[9] = "AVRSMDP1";

struct MdpFile {
    DiscreteMdp mdp;
    nlohmann::json metadata = nlohmann::json::object();
};

void write_mdp(std::ostream& os, const DiscreteMdp& mdp,
               const nlohmann::json& metadata = nlohmann::json::object());
MdpFile read_mdp(std::istream& is);

void save_mdp(const std::filesystem::path& path, const DiscreteMdp& mdp,
              const nlohmann::json& metadata = nlohmann::json::object());
MdpFile load_mdp(const std::filesystem::path& path);

nlohmann::json encode_mask_rle(const ConstraintMask& mask);
ConstraintMask decode_mask_rle(const nlohmann::json& rle, std::size_t states);

// Little-endian primitives shared with the grid dump writer.
namespace le {
void put_u32(std::ostream& os, std::uint32_t v);
void put_u64(std::ostream& os, std::uint64_t v);
void put_f64(std::ostream& os, double v);
std::uint32_t get_u32(std::istream& is);
std::uint64_t get_u64(std::istream& is);
double get_f64(std::istream& is);
}  // namespace le

}  // namespace avrsafe
