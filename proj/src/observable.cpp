#include "qnet/observable.hpp"

#include <algorithm>
#include <cctype>
#include <cstdlib>
#include <sstream>

namespace qnet {

struct Observable::Node {
    enum class Kind { Const, Qc, Q, Down, NDown, Neg, Add, Sub, Mul, Min, Max };
    Kind kind;
    double value = 0.0;  // Const
    int node = 0;        // Qc, Q, Down
    int cut = 0;         // Qc
    std::shared_ptr<const Node> lhs, rhs;
};

namespace {

using Node = Observable::Node;
using Kind = Node::Kind;

double eval_node(const Node& nd, Subset down, std::span<const int> n, int shift) {
    auto queue_at = [&](int j) -> int {
        if (j < 1 || j > static_cast<int>(n.size()))
            throw ValidationError("observable references node " + std::to_string(j) +
                                  " beyond state dimension " + std::to_string(n.size()));
        return n[j - 1] + (j == shift ? 1 : 0);
    };
    switch (nd.kind) {
        case Kind::Const: return nd.value;
        case Kind::Qc: return std::min(queue_at(nd.node), nd.cut);
        case Kind::Q: return queue_at(nd.node);
        case Kind::Down: return contains(down, nd.node) ? 1.0 : 0.0;
        case Kind::NDown: return popcount(down);
        case Kind::Neg: return -eval_node(*nd.lhs, down, n, shift);
        case Kind::Add: return eval_node(*nd.lhs, down, n, shift) + eval_node(*nd.rhs, down, n, shift);
        case Kind::Sub: return eval_node(*nd.lhs, down, n, shift) - eval_node(*nd.rhs, down, n, shift);
        case Kind::Mul: return eval_node(*nd.lhs, down, n, shift) * eval_node(*nd.rhs, down, n, shift);
        case Kind::Min: return std::min(eval_node(*nd.lhs, down, n, shift), eval_node(*nd.rhs, down, n, shift));
        case Kind::Max: return std::max(eval_node(*nd.lhs, down, n, shift), eval_node(*nd.rhs, down, n, shift));
    }
    throw std::logic_error("unreachable observable node kind");
}

int precedence(Kind k) {
    switch (k) {
        case Kind::Add:
        case Kind::Sub: return 1;
        case Kind::Mul: return 2;
        default: return 3;
    }
}

void print_node(const Node& nd, std::ostringstream& out) {
    auto child = [&](const Node& c, int min_prec) {
        bool paren = precedence(c.kind) < min_prec;
        if (paren) out << '(';
        print_node(c, out);
        if (paren) out << ')';
    };
    switch (nd.kind) {
        case Kind::Const: out << nd.value; break;
        case Kind::Qc: out << "qc(" << nd.node << ',' << nd.cut << ')'; break;
        case Kind::Q: out << "q(" << nd.node << ')'; break;
        case Kind::Down: out << "down(" << nd.node << ')'; break;
        case Kind::NDown: out << "ndown"; break;
        case Kind::Neg:
            out << '-';
            child(*nd.lhs, 3);
            break;
        case Kind::Add:
            child(*nd.lhs, 1);
            out << " + ";
            child(*nd.rhs, 2);
            break;
        case Kind::Sub:
            child(*nd.lhs, 1);
            out << " - ";
            child(*nd.rhs, 2);
            break;
        case Kind::Mul:
            child(*nd.lhs, 2);
            out << '*';
            child(*nd.rhs, 3);
            break;
        case Kind::Min:
            out << "min(";
            print_node(*nd.lhs, out);
            out << ',';
            print_node(*nd.rhs, out);
            out << ')';
            break;
        case Kind::Max:
            out << "max(";
            print_node(*nd.lhs, out);
            out << ',';
            print_node(*nd.rhs, out);
            out << ')';
            break;
    }
}

void collect_saturation(const Node& nd, std::vector<int>& cutoffs, std::vector<bool>& unbounded) {
    auto ensure = [&](int j) {
        if (static_cast<int>(cutoffs.size()) < j) {
            cutoffs.resize(j, 0);
            unbounded.resize(j, false);
        }
    };
    switch (nd.kind) {
        case Kind::Qc:
            ensure(nd.node);
            cutoffs[nd.node - 1] = std::max(cutoffs[nd.node - 1], nd.cut);
            break;
        case Kind::Q:
            ensure(nd.node);
            unbounded[nd.node - 1] = true;
            break;
        default:
            if (nd.lhs) collect_saturation(*nd.lhs, cutoffs, unbounded);
            if (nd.rhs) collect_saturation(*nd.rhs, cutoffs, unbounded);
            break;
    }
}

class Parser {
public:
    explicit Parser(std::string_view text) : text_(text) {}

    std::shared_ptr<const Node> parse() {
        auto e = expr();
        skip_ws();
        if (pos_ != text_.size()) fail("unexpected trailing input");
        return e;
    }

private:
    std::string_view text_;
    size_t pos_ = 0;

    [[noreturn]] void fail(const std::string& msg) {
        throw ParseError("observable syntax error at position " + std::to_string(pos_) + ": " + msg);
    }

    void skip_ws() {
        while (pos_ < text_.size() && std::isspace(static_cast<unsigned char>(text_[pos_]))) ++pos_;
    }

    bool eat(char c) {
        skip_ws();
        if (pos_ < text_.size() && text_[pos_] == c) {
            ++pos_;
            return true;
        }
        return false;
    }

    void expect(char c) {
        if (!eat(c)) fail(std::string("expected '") + c + "'");
    }

    std::shared_ptr<const Node> expr() {
        auto lhs = term();
        for (;;) {
            if (eat('+')) {
                auto n = std::make_shared<Node>();
                n->kind = Kind::Add;
                n->lhs = lhs;
                n->rhs = term();
                lhs = n;
            } else if (eat('-')) {
                auto n = std::make_shared<Node>();
                n->kind = Kind::Sub;
                n->lhs = lhs;
                n->rhs = term();
                lhs = n;
            } else {
                return lhs;
            }
        }
    }

    std::shared_ptr<const Node> term() {
        auto lhs = factor();
        while (eat('*')) {
            auto n = std::make_shared<Node>();
            n->kind = Kind::Mul;
            n->lhs = lhs;
            n->rhs = factor();
            lhs = n;
        }
        return lhs;
    }

    int integer() {
        skip_ws();
        if (pos_ >= text_.size() || !std::isdigit(static_cast<unsigned char>(text_[pos_]))) fail("expected integer");
        int v = 0;
        while (pos_ < text_.size() && std::isdigit(static_cast<unsigned char>(text_[pos_]))) {
            v = v * 10 + (text_[pos_] - '0');
            ++pos_;
        }
        return v;
    }

    int node_index() {
        int j = integer();
        if (j < 1 || j > kMaxNodes) fail("node index out of range 1..16");
        return j;
    }

    std::shared_ptr<const Node> factor() {
        skip_ws();
        if (eat('-')) {
            auto n = std::make_shared<Node>();
            n->kind = Kind::Neg;
            n->lhs = factor();
            return n;
        }
        if (eat('(')) {
            auto e = expr();
            expect(')');
            return e;
        }
        if (pos_ >= text_.size()) fail("unexpected end of input");
        char c = text_[pos_];
        if (std::isdigit(static_cast<unsigned char>(c)) || c == '.') {
            const char* begin = text_.data() + pos_;
            char* end = nullptr;
            double v = std::strtod(begin, &end);
            if (end == begin) fail("malformed number");
            pos_ += static_cast<size_t>(end - begin);
            auto n = std::make_shared<Node>();
            n->kind = Kind::Const;
            n->value = v;
            return n;
        }
        if (std::isalpha(static_cast<unsigned char>(c))) {
            size_t start = pos_;
            while (pos_ < text_.size() && std::isalpha(static_cast<unsigned char>(text_[pos_]))) ++pos_;
            std::string ident(text_.substr(start, pos_ - start));
            if (ident == "ndown") {
                auto n = std::make_shared<Node>();
                n->kind = Kind::NDown;
                return n;
            }
            if (ident == "q" || ident == "qc" || ident == "down") {
                expect('(');
                auto n = std::make_shared<Node>();
                n->node = node_index();
                if (ident == "q") {
                    n->kind = Kind::Q;
                } else if (ident == "down") {
                    n->kind = Kind::Down;
                } else {
                    n->kind = Kind::Qc;
                    expect(',');
                    n->cut = integer();
                }
                expect(')');
                return n;
            }
            if (ident == "min" || ident == "max") {
                expect('(');
                auto n = std::make_shared<Node>();
                n->kind = ident == "min" ? Kind::Min : Kind::Max;
                n->lhs = expr();
                expect(',');
                n->rhs = expr();
                expect(')');
                return n;
            }
            pos_ = start;
            fail("unknown identifier '" + ident + "'");
        }
        fail("unexpected character");
    }
};

}  // namespace

double Observable::eval(Subset down, std::span<const int> queues) const {
    return eval_node(*root_, down, queues, 0);
}

double Observable::eval_shifted(Subset down, std::span<const int> queues, int j) const {
    return eval_node(*root_, down, queues, j);
}

bool Observable::is_saturated() const {
    return std::none_of(unbounded_.begin(), unbounded_.end(), [](bool b) { return b; });
}

std::string Observable::str() const {
    std::ostringstream out;
    print_node(*root_, out);
    return out.str();
}

Observable parse_observable(std::string_view text) {
    Observable f;
    f.root_ = Parser(text).parse();
    collect_saturation(*f.root_, f.cutoffs_, f.unbounded_);
    f.max_node_ = static_cast<int>(f.cutoffs_.size());
    return f;
}

}  // namespace qnet
