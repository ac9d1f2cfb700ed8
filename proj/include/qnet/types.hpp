#pragma once

#include <cstdint>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

namespace qnet {

// Down-sets are bitmasks over nodes 1..J; bit (j-1) set means node j is down.
using Subset = std::uint32_t;

constexpr int kMaxNodes = 16;

inline bool contains(Subset d, int node) { return (d >> (node - 1)) & 1u; }
inline Subset with_node(Subset d, int node) { return d | (Subset{1} << (node - 1)); }
inline Subset without_node(Subset d, int node) { return d & ~(Subset{1} << (node - 1)); }
inline int popcount(Subset d) { return __builtin_popcount(d); }
inline Subset full_set(int J) { return (Subset{1} << J) - 1; }
inline bool is_subset_of(Subset a, Subset b) { return (a & ~b) == 0; }

// "[1,3]" notation, ascending, "[]" for the empty set.
std::string subset_to_string(Subset d, int J);
Subset subset_from_string(const std::string& text, int J);

struct State {
    Subset down = 0;
    std::vector<int> queues;
};

class ValidationError : public std::runtime_error {
public:
    explicit ValidationError(const std::string& what) : std::runtime_error(what) {}
};

class ParseError : public std::runtime_error {
public:
    explicit ParseError(const std::string& what) : std::runtime_error(what) {}
};

}  // namespace qnet
