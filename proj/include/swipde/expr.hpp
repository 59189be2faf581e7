#pragma once

// Small arithmetic expression language used to declare problem coefficients.
//
// Grammar (lowest to highest precedence):
//   sum     := product (('+' | '-') product)*
//   product := unary (('*' | '/') unary)*
//   unary   := '-' unary | power
//   power   := primary ('^' integer-exponent)?     (exponent may be signed)
//   primary := number | name | name '(' args ')' | '(' sum ')'
//
// '^' binds tighter than unary minus, so "-x^2" is -(x^2).

#include <cctype>
#include <charconv>
#include <cmath>
#include <cstddef>
#include <map>
#include <memory>
#include <set>
#include <span>
#include <stdexcept>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

namespace swipde {

class ParseError : public std::runtime_error {
public:
    ParseError(const std::string& what, std::size_t offset)
        : std::runtime_error(what + " at offset " + std::to_string(offset)), offset_(offset) {}
    std::size_t offset() const noexcept { return offset_; }

private:
    std::size_t offset_;
};

class UndeclaredVariable : public std::runtime_error {
public:
    explicit UndeclaredVariable(std::string name)
        : std::runtime_error("undeclared variable '" + name + "'"), name_(std::move(name)) {}
    const std::string& name() const noexcept { return name_; }

private:
    std::string name_;
};

class EvalError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

enum class Func { Sin, Cos, Exp, Tanh, Abs, Sqrt, Min, Max };

namespace detail {

struct ExprNode;
using NodePtr = std::shared_ptr<const ExprNode>;

enum class NodeKind { Number, Variable, Neg, Add, Sub, Mul, Div, Pow, Call };

struct ExprNode {
    NodeKind kind;
    double number = 0.0;
    std::string name;
    int slot = -1;  // index into a bound variable layout, -1 when unbound
    int exponent = 0;
    Func func = Func::Sin;
    std::vector<NodePtr> args;
};

inline std::string shortest(double v) {
    char buf[64];
    auto res = std::to_chars(buf, buf + sizeof buf, v);
    return std::string(buf, res.ptr);
}

inline const std::map<std::string, std::pair<Func, int>, std::less<>>& function_table() {
    static const std::map<std::string, std::pair<Func, int>, std::less<>> table{
        {"sin", {Func::Sin, 1}},   {"cos", {Func::Cos, 1}}, {"exp", {Func::Exp, 1}},
        {"tanh", {Func::Tanh, 1}}, {"abs", {Func::Abs, 1}}, {"sqrt", {Func::Sqrt, 1}},
        {"min", {Func::Min, 2}},   {"max", {Func::Max, 2}},
    };
    return table;
}

inline const char* func_name(Func f) {
    switch (f) {
        case Func::Sin: return "sin";
        case Func::Cos: return "cos";
        case Func::Exp: return "exp";
        case Func::Tanh: return "tanh";
        case Func::Abs: return "abs";
        case Func::Sqrt: return "sqrt";
        case Func::Min: return "min";
        case Func::Max: return "max";
    }
    return "?";
}

class Parser {
public:
    Parser(std::string_view text, const std::set<std::string, std::less<>>& allowed)
        : text_(text), allowed_(allowed) {}

    NodePtr parse() {
        skip_ws();
        if (pos_ >= text_.size()) throw ParseError("empty expression", pos_);
        auto node = parse_sum();
        skip_ws();
        if (pos_ != text_.size())
            throw ParseError(std::string("unexpected '") + text_[pos_] + "'", pos_);
        return node;
    }

private:
    void skip_ws() {
        while (pos_ < text_.size() && std::isspace(static_cast<unsigned char>(text_[pos_]))) ++pos_;
    }

    bool accept(char c) {
        skip_ws();
        if (pos_ < text_.size() && text_[pos_] == c) {
            ++pos_;
            return true;
        }
        return false;
    }

    void expect(char c) {
        if (!accept(c)) {
            if (pos_ >= text_.size())
                throw ParseError(std::string("expected '") + c + "' but reached end of input", pos_);
            throw ParseError(std::string("expected '") + c + "'", pos_);
        }
    }

    static NodePtr binary(NodeKind kind, NodePtr lhs, NodePtr rhs) {
        auto n = std::make_shared<ExprNode>();
        n->kind = kind;
        n->args = {std::move(lhs), std::move(rhs)};
        return n;
    }

    NodePtr parse_sum() {
        auto lhs = parse_product();
        for (;;) {
            if (accept('+'))
                lhs = binary(NodeKind::Add, lhs, parse_product());
            else if (accept('-'))
                lhs = binary(NodeKind::Sub, lhs, parse_product());
            else
                return lhs;
        }
    }

    NodePtr parse_product() {
        auto lhs = parse_unary();
        for (;;) {
            if (accept('*'))
                lhs = binary(NodeKind::Mul, lhs, parse_unary());
            else if (accept('/'))
                lhs = binary(NodeKind::Div, lhs, parse_unary());
            else
                return lhs;
        }
    }

    NodePtr parse_unary() {
        if (accept('-')) {
            auto n = std::make_shared<ExprNode>();
            n->kind = NodeKind::Neg;
            n->args = {parse_unary()};
            return n;
        }
        if (accept('+')) return parse_unary();
        return parse_power();
    }

    NodePtr parse_power() {
        auto base = parse_primary();
        while (accept('^')) {
            skip_ws();
            std::size_t start = pos_;
            bool negative = false;
            if (accept('-')) negative = true;
            skip_ws();
            std::size_t digits = pos_;
            while (pos_ < text_.size() && std::isdigit(static_cast<unsigned char>(text_[pos_]))) ++pos_;
            if (digits == pos_) throw ParseError("expected integer exponent", start);
            int exponent = 0;
            auto [ptr, ec] = std::from_chars(text_.data() + digits, text_.data() + pos_, exponent);
            if (ec != std::errc()) throw ParseError("exponent out of range", digits);
            auto n = std::make_shared<ExprNode>();
            n->kind = NodeKind::Pow;
            n->exponent = negative ? -exponent : exponent;
            n->args = {std::move(base)};
            base = std::move(n);
        }
        return base;
    }

    NodePtr parse_primary() {
        skip_ws();
        if (pos_ >= text_.size()) throw ParseError("unexpected end of input", pos_);
        char c = text_[pos_];
        if (c == '(') {
            ++pos_;
            auto inner = parse_sum();
            expect(')');
            return inner;
        }
        if (std::isdigit(static_cast<unsigned char>(c)) || c == '.') return parse_number();
        if (std::isalpha(static_cast<unsigned char>(c)) || c == '_') return parse_name();
        throw ParseError(std::string("unexpected '") + c + "'", pos_);
    }

    NodePtr parse_number() {
        std::size_t start = pos_;
        double value = 0.0;
        auto [ptr, ec] = std::from_chars(text_.data() + pos_, text_.data() + text_.size(), value);
        if (ec != std::errc()) throw ParseError("malformed number", start);
        pos_ = static_cast<std::size_t>(ptr - text_.data());
        auto n = std::make_shared<ExprNode>();
        n->kind = NodeKind::Number;
        n->number = value;
        return n;
    }

    NodePtr parse_name() {
        std::size_t start = pos_;
        while (pos_ < text_.size() &&
               (std::isalnum(static_cast<unsigned char>(text_[pos_])) || text_[pos_] == '_'))
            ++pos_;
        std::string name(text_.substr(start, pos_ - start));
        skip_ws();
        if (pos_ < text_.size() && text_[pos_] == '(') {
            auto it = function_table().find(name);
            if (it == function_table().end()) throw ParseError("unknown function '" + name + "'", start);
            ++pos_;
            auto n = std::make_shared<ExprNode>();
            n->kind = NodeKind::Call;
            n->func = it->second.first;
            n->name = name;
            n->args.push_back(parse_sum());
            while (accept(',')) n->args.push_back(parse_sum());
            expect(')');
            if (static_cast<int>(n->args.size()) != it->second.second)
                throw ParseError("function '" + name + "' expects " +
                                     std::to_string(it->second.second) + " argument(s)",
                                 start);
            return n;
        }
        if (name == "pi") {
            auto n = std::make_shared<ExprNode>();
            n->kind = NodeKind::Number;
            n->number = 3.14159265358979323846;
            return n;
        }
        if (!allowed_.contains(name)) throw UndeclaredVariable(name);
        auto n = std::make_shared<ExprNode>();
        n->kind = NodeKind::Variable;
        n->name = std::move(name);
        return n;
    }

    std::string_view text_;
    const std::set<std::string, std::less<>>& allowed_;
    std::size_t pos_ = 0;
};

inline double checked(double v, const char* what) {
    if (!std::isfinite(v)) throw EvalError(std::string("non-finite result in ") + what);
    return v;
}

template <class Lookup>
double eval_node(const ExprNode& n, const Lookup& lookup) {
    switch (n.kind) {
        case NodeKind::Number: return n.number;
        case NodeKind::Variable: return lookup(n);
        case NodeKind::Neg: return -eval_node(*n.args[0], lookup);
        case NodeKind::Add:
            return checked(eval_node(*n.args[0], lookup) + eval_node(*n.args[1], lookup), "'+'");
        case NodeKind::Sub:
            return checked(eval_node(*n.args[0], lookup) - eval_node(*n.args[1], lookup), "'-'");
        case NodeKind::Mul:
            return checked(eval_node(*n.args[0], lookup) * eval_node(*n.args[1], lookup), "'*'");
        case NodeKind::Div: {
            double num = eval_node(*n.args[0], lookup);
            double den = eval_node(*n.args[1], lookup);
            if (den == 0.0) throw EvalError("division by zero");
            return checked(num / den, "'/'");
        }
        case NodeKind::Pow: {
            double base = eval_node(*n.args[0], lookup);
            if (base == 0.0 && n.exponent < 0) throw EvalError("division by zero");
            double r = 1.0;
            int e = n.exponent < 0 ? -n.exponent : n.exponent;
            double b = base;
            while (e > 0) {
                if (e & 1) r *= b;
                b *= b;
                e >>= 1;
            }
            return checked(n.exponent < 0 ? 1.0 / r : r, "'^'");
        }
        case NodeKind::Call: {
            double a = eval_node(*n.args[0], lookup);
            switch (n.func) {
                case Func::Sin: return checked(std::sin(a), "sin");
                case Func::Cos: return checked(std::cos(a), "cos");
                case Func::Exp: return checked(std::exp(a), "exp");
                case Func::Tanh: return std::tanh(a);
                case Func::Abs: return std::abs(a);
                case Func::Sqrt:
                    if (a < 0.0) throw EvalError("sqrt of negative value");
                    return std::sqrt(a);
                case Func::Min: return std::min(a, eval_node(*n.args[1], lookup));
                case Func::Max: return std::max(a, eval_node(*n.args[1], lookup));
            }
        }
    }
    throw EvalError("corrupt expression node");
}

// Precedence levels used by the printer; higher binds tighter.
inline int precedence(const ExprNode& n) {
    switch (n.kind) {
        case NodeKind::Add:
        case NodeKind::Sub: return 1;
        case NodeKind::Mul:
        case NodeKind::Div: return 2;
        case NodeKind::Neg: return 3;
        case NodeKind::Pow: return 4;
        default: return 5;
    }
}

inline void print_node(const ExprNode& n, std::string& out) {
    auto child = [&out](const ExprNode& c, bool wrap) {
        if (wrap) out += '(';
        print_node(c, out);
        if (wrap) out += ')';
    };
    switch (n.kind) {
        case NodeKind::Number:
            // negative literals only arise from folding, parenthesize to stay parseable
            if (n.number < 0.0 || std::signbit(n.number)) {
                out += "(" + shortest(n.number) + ")";
            } else {
                out += shortest(n.number);
            }
            return;
        case NodeKind::Variable: out += n.name; return;
        case NodeKind::Neg:
            out += '-';
            child(*n.args[0], precedence(*n.args[0]) < 3);
            return;
        case NodeKind::Pow:
            child(*n.args[0], precedence(*n.args[0]) <= 4);
            out += '^';
            out += std::to_string(n.exponent);
            return;
        case NodeKind::Call:
            out += func_name(n.func);
            out += '(';
            for (std::size_t i = 0; i < n.args.size(); ++i) {
                if (i) out += ", ";
                print_node(*n.args[i], out);
            }
            out += ')';
            return;
        default: break;
    }
    const char* op = n.kind == NodeKind::Add ? " + "
                     : n.kind == NodeKind::Sub ? " - "
                     : n.kind == NodeKind::Mul ? " * "
                                               : " / ";
    int p = precedence(n);
    child(*n.args[0], precedence(*n.args[0]) < p);
    out += op;
    // left-associative: a right operand at the same level needs parentheses
    child(*n.args[1], precedence(*n.args[1]) <= p);
}

inline void collect_vars(const ExprNode& n, std::set<std::string>& out) {
    if (n.kind == NodeKind::Variable) out.insert(n.name);
    for (const auto& a : n.args) collect_vars(*a, out);
}

inline NodePtr bind_node(const NodePtr& n, const std::vector<std::string>& layout) {
    auto copy = std::make_shared<ExprNode>(*n);
    if (copy->kind == NodeKind::Variable) {
        copy->slot = -1;
        for (std::size_t i = 0; i < layout.size(); ++i)
            if (layout[i] == copy->name) copy->slot = static_cast<int>(i);
        if (copy->slot < 0) throw UndeclaredVariable(copy->name);
    }
    for (auto& a : copy->args) a = bind_node(a, layout);
    return copy;
}

}  // namespace detail

using VarSet = std::set<std::string, std::less<>>;

/// Immutable expression tree. Copies share the underlying nodes.
class Expr {
public:
    Expr() : Expr(0.0) {}
    explicit Expr(double constant) {
        auto n = std::make_shared<detail::ExprNode>();
        n->kind = detail::NodeKind::Number;
        n->number = constant;
        root_ = n;
    }

    /// Parses `text`, rejecting any variable name not in `allowed_vars`.
    static Expr parse(std::string_view text, const VarSet& allowed_vars) {
        Expr e;
        e.root_ = detail::Parser(text, allowed_vars).parse();
        e.source_ = std::string(text);
        return e;
    }

    /// Returns a copy whose variables resolve to positions in `layout`, enabling eval(span).
    Expr bind(const std::vector<std::string>& layout) const {
        Expr e = *this;
        e.root_ = detail::bind_node(root_, layout);
        e.layout_size_ = layout.size();
        return e;
    }

    bool is_bound() const noexcept { return layout_size_ > 0 || variables().empty(); }

    double eval(const std::map<std::string, double, std::less<>>& bindings) const {
        return detail::checked(
            detail::eval_node(*root_,
                              [&](const detail::ExprNode& n) {
                                  auto it = bindings.find(n.name);
                                  if (it == bindings.end())
                                      throw EvalError("missing binding for '" + n.name + "'");
                                  return it->second;
                              }),
            "expression");
    }

    /// Fast path for bound expressions; `values` follows the layout passed to bind().
    double eval(std::span<const double> values) const {
        return detail::checked(detail::eval_node(*root_,
                                                 [&](const detail::ExprNode& n) {
                                                     if (n.slot < 0 ||
                                                         static_cast<std::size_t>(n.slot) >= values.size())
                                                         throw EvalError("unbound variable '" + n.name + "'");
                                                     return values[static_cast<std::size_t>(n.slot)];
                                                 }),
                               "expression");
    }

    std::set<std::string> variables() const {
        std::set<std::string> out;
        detail::collect_vars(*root_, out);
        return out;
    }

    bool uses(std::string_view name) const { return variables().contains(std::string(name)); }

    bool is_constant() const { return variables().empty(); }

    /// Canonical fully-spaced form; re-parses to an equivalent tree.
    std::string print() const {
        std::string out;
        detail::print_node(*root_, out);
        return out;
    }

    /// Original text when parsed, canonical form otherwise.
    std::string source() const { return source_.empty() ? print() : source_; }

private:
    detail::NodePtr root_;
    std::string source_;
    std::size_t layout_size_ = 0;
};

}  // namespace swipde
