#include "qnet/types.hpp"

#include <sstream>

namespace qnet {

std::string subset_to_string(Subset d, int J) {
    std::ostringstream out;
    out << '[';
    bool first = true;
    for (int j = 1; j <= J; ++j) {
        if (!contains(d, j)) continue;
        if (!first) out << ',';
        out << j;
        first = false;
    }
    out << ']';
    return out.str();
}

Subset subset_from_string(const std::string& text, int J) {
    size_t i = 0;
    auto skip_ws = [&] { while (i < text.size() && std::isspace(static_cast<unsigned char>(text[i]))) ++i; };
    skip_ws();
    if (i >= text.size() || text[i] != '[') throw ParseError("subset literal must start with '[': " + text);
    ++i;
    Subset d = 0;
    int last = 0;
    skip_ws();
    while (i < text.size() && text[i] != ']') {
        int value = 0;
        if (!std::isdigit(static_cast<unsigned char>(text[i]))) throw ParseError("expected node index in subset literal: " + text);
        while (i < text.size() && std::isdigit(static_cast<unsigned char>(text[i]))) {
            value = value * 10 + (text[i] - '0');
            ++i;
        }
        if (value < 1 || value > J) throw ParseError("node index out of range in subset literal: " + text);
        if (value <= last) throw ParseError("subset literal must be strictly ascending: " + text);
        last = value;
        d = with_node(d, value);
        skip_ws();
        if (i < text.size() && text[i] == ',') { ++i; skip_ws(); }
    }
    if (i >= text.size() || text[i] != ']') throw ParseError("unterminated subset literal: " + text);
    ++i;
    skip_ws();
    if (i != text.size()) throw ParseError("trailing characters after subset literal: " + text);
    return d;
}

}  // namespace qnet
