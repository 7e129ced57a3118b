#include "avrsafe/mdp_io.hpp"

#include "avrsafe/errors.hpp"

#include <algorithm>
#include <array>
#include <bit>
#include <cstring>
#include <fstream>
#include <istream>
#include <ostream>

namespace avrsafe {

namespace le {

void put_u32(std::ostream& os, std::uint32_t v) {
    std::array<char, 4> b{};
    for (int i = 0; i < 4; ++i) b[i] = static_cast<char>((v >> (8 * i)) & 0xffu);
    os.write(b.data(), b.size());
}

void put_u64(std::ostream& os, std::uint64_t v) {
    std::array<char, 8> b{};
    for (int i = 0; i < 8; ++i) b[i] = static_cast<char>((v >> (8 * i)) & 0xffu);
    os.write(b.data(), b.size());
}

void put_f64(std::ostream& os, double v) { put_u64(os, std::bit_cast<std::uint64_t>(v)); }

namespace {
template <std::size_t N>
std::array<unsigned char, N> read_bytes(std::istream& is) {
    std::array<unsigned char, N> b{};
    is.read(reinterpret_cast<char*>(b.data()), N);
    if (!is) throw StructuralError("unexpected end of binary stream");
    return b;
}
}  // namespace

std::uint32_t get_u32(std::istream& is) {
    const auto b = read_bytes<4>(is);
    std::uint32_t v = 0;
    for (int i = 0; i < 4; ++i) v |= static_cast<std::uint32_t>(b[i]) << (8 * i);
    return v;
}

std::uint64_t get_u64(std::istream& is) {
    const auto b = read_bytes<8>(is);
    std::uint64_t v = 0;
    for (int i = 0; i < 8; ++i) v |= static_cast<std::uint64_t>(b[i]) << (8 * i);
    return v;
}

double get_f64(std::istream& is) { return std::bit_cast<double>(get_u64(is)); }

}  // namespace le

nlohmann::json encode_mask_rle(const ConstraintMask& mask) {
    nlohmann::json runs = nlohmann::json::array();
    const auto& flags = mask.flags();
    if (flags.empty()) return {{"first", true}, {"runs", runs}};
    bool current = flags[0];
    std::uint64_t length = 0;
    for (bool f : flags) {
        if (f == current) {
            ++length;
        } else {
            runs.push_back(length);
            current = f;
            length = 1;
        }
    }
    runs.push_back(length);
    return {{"first", static_cast<bool>(flags[0])}, {"runs", runs}};
}

ConstraintMask decode_mask_rle(const nlohmann::json& rle, std::size_t states) {
    std::vector<bool> flags;
    flags.reserve(states);
    bool current = rle.at("first").get<bool>();
    for (const auto& run : rle.at("runs")) {
        const auto n = run.get<std::uint64_t>();
        flags.insert(flags.end(), n, current);
        current = !current;
    }
    if (flags.size() != states) throw StructuralError("constraint mask RLE length mismatch");
    return ConstraintMask(std::move(flags));
}

void write_mdp(std::ostream& os, const DiscreteMdp& mdp, const nlohmann::json& metadata) {
    const std::size_t S = mdp.num_states();
    const std::size_t A = mdp.num_actions();

    // Records are emitted sorted by (s, a, next); rows built by MdpBuilder are
    // already sorted but hand-built tables may not be.
    std::vector<Transition> sorted;
    std::size_t records = mdp.transitions().nonzeros();

    nlohmann::json header = {
        {"format", "avrsafe-mdp"},
        {"version", 1},
        {"states", S},
        {"actions", A},
        {"records", records},
        {"constraint_rle", encode_mask_rle(mdp.constraint())},
        {"initial_weights", mdp.initial_weights()},
        {"metadata", metadata},
    };
    const std::string text = header.dump();

    os.write(kMdpMagic, 8);
    le::put_u64(os, text.size());
    os.write(text.data(), static_cast<std::streamsize>(text.size()));
    for (StateId s = 0; s < S; ++s) {
        for (ActionId a = 0; a < A; ++a) {
            const auto row = mdp.row(s, a);
            sorted.assign(row.begin(), row.end());
            std::sort(sorted.begin(), sorted.end(),
                      [](const Transition& x, const Transition& y) { return x.next < y.next; });
            for (const auto& e : sorted) {
                le::put_u32(os, s);
                le::put_u32(os, a);
                le::put_u32(os, e.next);
                le::put_f64(os, e.probability);
            }
        }
    }
    if (!os) throw Error("failed writing MDP dump");
}

MdpFile read_mdp(std::istream& is) {
    char magic[8];
    is.read(magic, 8);
    if (!is || std::memcmp(magic, kMdpMagic, 8) != 0) {
        throw StructuralError("not an MDP dump (bad magic)");
    }
    const std::uint64_t header_len = le::get_u64(is);
    std::string text(header_len, '\0');
    is.read(text.data(), static_cast<std::streamsize>(header_len));
    if (!is) throw StructuralError("truncated MDP dump header");
    const auto header = nlohmann::json::parse(text);
    if (header.value("format", "") != "avrsafe-mdp" || header.value("version", 0) != 1) {
        throw StructuralError("unsupported MDP dump format");
    }
    const auto S = header.at("states").get<std::size_t>();
    const auto A = header.at("actions").get<std::size_t>();
    const auto records = header.at("records").get<std::uint64_t>();

    SparseTransitionTable table(S, A);
    std::vector<Transition> row;
    std::size_t next_row = 0;
    auto flush_until = [&](std::size_t k) {
        while (next_row < k) {
            table.append_row(row);
            row.clear();
            ++next_row;
        }
    };
    for (std::uint64_t r = 0; r < records; ++r) {
        const StateId s = le::get_u32(is);
        const ActionId a = le::get_u32(is);
        const StateId next = le::get_u32(is);
        const double p = le::get_f64(is);
        if (s >= S || a >= A) throw StructuralError("MDP record index out of range");
        const std::size_t k = static_cast<std::size_t>(s) * A + a;
        if (k < next_row) throw StructuralError("MDP records not sorted by (s, a, next)");
        if (k > next_row) {
            // close the current row, then emit empty rows up to k
            table.append_row(row);
            row.clear();
            ++next_row;
            flush_until(k);
        }
        if (!row.empty() && row.back().next >= next) {
            throw StructuralError("MDP records not sorted by (s, a, next)");
        }
        row.push_back({next, p});
    }
    if (S * A > 0) {
        table.append_row(row);
        row.clear();
        ++next_row;
        flush_until(S * A);
    }

    auto mask = decode_mask_rle(header.at("constraint_rle"), S);
    auto weights = header.at("initial_weights").get<std::vector<double>>();
    MdpFile out{DiscreteMdp(std::move(table), std::move(mask), std::move(weights)),
                header.value("metadata", nlohmann::json::object())};
    return out;
}

void save_mdp(const std::filesystem::path& path, const DiscreteMdp& mdp,
              const nlohmann::json& metadata) {
    std::ofstream os(path, std::ios::binary | std::ios::trunc);
    if (!os) throw Error("cannot open " + path.string() + " for writing");
    write_mdp(os, mdp, metadata);
}

MdpFile load_mdp(const std::filesystem::path& path) {
    std::ifstream is(path, std::ios::binary);
    if (!is) throw Error("cannot open " + path.string());
    return read_mdp(is);
}

}  // namespace avrsafe
