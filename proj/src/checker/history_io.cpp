#include "htr/checker/checker.hpp"

#include <charconv>
#include <cstdio>
#include <fstream>
#include <istream>
#include <ostream>
#include <string>
#include <string_view>
#include <vector>

namespace htr::checker {
namespace {

constexpr std::string_view kMagic = "HTRHIST 1";

const char* op_token(OpKind op) {
    switch (op) {
        case OpKind::read: return "read";
        case OpKind::write: return "write";
        case OpKind::try_commit: return "tryC";
        case OpKind::try_abort: return "tryA";
    }
    return "?";
}

const char* result_token(ResultKind r) {
    switch (r) {
        case ResultKind::none: return "-";
        case ResultKind::value: return "val";
        case ResultKind::ok: return "ok";
        case ResultKind::commit: return "C";
        case ResultKind::abort: return "A";
    }
    return "?";
}

void put_value(std::string& out, Value v) {
    if (v.is_empty()) {
        out += "nil";
    } else {
        out += std::to_string(v.raw());
    }
}

class Tokens {
public:
    Tokens(std::string_view line, std::size_t lineno) : line_(line), lineno_(lineno) {}

    std::string_view next() {
        while (pos_ < line_.size() && line_[pos_] == ' ') ++pos_;
        if (pos_ >= line_.size()) fail("missing field");
        const auto b = pos_;
        while (pos_ < line_.size() && line_[pos_] != ' ') ++pos_;
        return line_.substr(b, pos_ - b);
    }

    template <typename T>
    T number() {
        return parse_number<T>(next());
    }

    template <typename T>
    T parse_number(std::string_view tok) {
        T v{};
        auto [p, ec] = std::from_chars(tok.data(), tok.data() + tok.size(), v);
        if (ec != std::errc{} || p != tok.data() + tok.size()) fail("bad number '" + std::string(tok) + "'");
        return v;
    }

    Value value() {
        const auto tok = next();
        if (tok == "nil") return Value::empty();
        return Value{parse_number<std::int64_t>(tok)};
    }

    void end() {
        while (pos_ < line_.size() && line_[pos_] == ' ') ++pos_;
        if (pos_ != line_.size()) fail("trailing fields");
    }

    [[noreturn]] void fail(const std::string& why) const {
        throw InputError("history line " + std::to_string(lineno_) + ": " + why);
    }

private:
    std::string_view line_;
    std::size_t lineno_;
    std::size_t pos_ = 0;
};

OpKind parse_op(Tokens& t) {
    const auto s = t.next();
    if (s == "read") return OpKind::read;
    if (s == "write") return OpKind::write;
    if (s == "tryC") return OpKind::try_commit;
    if (s == "tryA") return OpKind::try_abort;
    t.fail("unknown operation '" + std::string(s) + "'");
}

ResultKind parse_result(Tokens& t) {
    const auto s = t.next();
    if (s == "val") return ResultKind::value;
    if (s == "ok") return ResultKind::ok;
    if (s == "C") return ResultKind::commit;
    if (s == "A") return ResultKind::abort;
    t.fail("unknown result '" + std::string(s) + "'");
}

}  // namespace

void write_history(std::ostream& out, const THistory& h) {
    std::string buf;
    buf.reserve(1 << 16);
    auto flush = [&] {
        out.write(buf.data(), static_cast<std::streamsize>(buf.size()));
        buf.clear();
    };
    buf += kMagic;
    buf += "\nN " + std::to_string(h.process_count) + "\n";
    for (const auto& [oid, v] : h.initial) {
        buf += "I " + std::to_string(oid) + ' ';
        put_value(buf, v);
        buf += '\n';
        if (buf.size() > (1 << 15)) flush();
    }
    for (const auto& e : h.events) {
        buf += "E " + std::to_string(e.seq) + ' ' + std::to_string(e.wall.ticks) + ' ' + std::to_string(e.process) +
               ' ' + std::to_string(e.tx) + (e.kind == EventKind::invoke ? " inv " : " res ") + op_token(e.op) + ' ' +
               std::to_string(e.oid);
        if (e.kind == EventKind::respond) {
            buf += ' ';
            buf += result_token(e.result);
        }
        buf += ' ';
        put_value(buf, e.value);
        buf += '\n';
        if (buf.size() > (1 << 15)) flush();
    }
    for (const auto& m : h.meta) {
        buf += "T " + std::to_string(m.tx) + ' ' + std::to_string(m.process) + ' ' + std::string(to_string(m.mode)) +
               ' ' + (m.request_id ? std::to_string(*m.request_id) : std::string("-")) + ' ' +
               std::to_string(m.class_id) + ' ' + std::to_string(m.start) + ' ' + std::to_string(m.end) + ' ' +
               (m.certified ? "1" : "0") + ' ' + (m.delivered ? "1" : "0") + ' ';
        if (m.readset.empty()) buf += '-';
        for (std::size_t i = 0; i < m.readset.size(); ++i) {
            if (i) buf += ',';
            buf += std::to_string(m.readset[i]);
        }
        buf += ' ';
        if (m.updates.empty()) buf += '-';
        for (std::size_t i = 0; i < m.updates.size(); ++i) {
            if (i) buf += ',';
            buf += std::to_string(m.updates[i].first) + ':';
            put_value(buf, m.updates[i].second);
        }
        buf += '\n';
        if (buf.size() > (1 << 15)) flush();
    }
    buf += "Z " + std::to_string(h.events.size()) + ' ' + std::to_string(h.meta.size()) + '\n';
    flush();
}

THistory read_history(std::istream& in) {
    THistory h;
    std::string line;
    std::size_t lineno = 0;
    bool header = false;
    bool trailer = false;
    while (std::getline(in, line)) {
        ++lineno;
        if (line.empty()) continue;
        if (trailer) throw InputError("history line " + std::to_string(lineno) + ": content after trailer");
        if (!header) {
            if (line != kMagic) throw InputError("not a history file (bad header)");
            header = true;
            continue;
        }
        Tokens t(line, lineno);
        const auto tag = t.next();
        if (tag == "N") {
            h.process_count = t.number<std::uint32_t>();
        } else if (tag == "I") {
            const auto oid = t.number<ObjectId>();
            h.initial.emplace_back(oid, t.value());
        } else if (tag == "E") {
            TEvent e;
            e.seq = t.number<std::uint64_t>();
            e.wall = sim::SimTime{t.number<std::uint64_t>()};
            e.process = t.number<std::uint32_t>();
            e.tx = t.number<TxId>();
            const auto kind = t.next();
            if (kind == "inv") {
                e.kind = EventKind::invoke;
            } else if (kind == "res") {
                e.kind = EventKind::respond;
            } else {
                t.fail("event kind must be inv or res");
            }
            e.op = parse_op(t);
            e.oid = t.number<ObjectId>();
            if (e.kind == EventKind::respond) e.result = parse_result(t);
            e.value = t.value();
            h.events.push_back(e);
        } else if (tag == "T") {
            TxMeta m;
            m.tx = t.number<TxId>();
            m.process = t.number<std::uint32_t>();
            const auto mode = t.next();
            if (mode == "DU") {
                m.mode = Mode::du;
            } else if (mode == "SM") {
                m.mode = Mode::sm;
            } else {
                t.fail("mode must be DU or SM");
            }
            const auto rid = t.next();
            if (rid != "-") m.request_id = t.parse_number<RequestId>(rid);
            m.class_id = t.number<ClassId>();
            m.start = t.number<std::uint64_t>();
            m.end = t.number<std::uint64_t>();
            m.certified = t.number<int>() != 0;
            m.delivered = t.number<int>() != 0;
            const auto rs = t.next();
            if (rs != "-") {
                std::size_t b = 0;
                while (b <= rs.size()) {
                    auto e = rs.find(',', b);
                    if (e == std::string_view::npos) e = rs.size();
                    m.readset.push_back(t.parse_number<ObjectId>(rs.substr(b, e - b)));
                    b = e + 1;
                }
            }
            const auto us = t.next();
            if (us != "-") {
                std::size_t b = 0;
                while (b <= us.size()) {
                    auto e = us.find(',', b);
                    if (e == std::string_view::npos) e = us.size();
                    const auto item = us.substr(b, e - b);
                    const auto colon = item.find(':');
                    if (colon == std::string_view::npos) t.fail("update entry needs oid:value");
                    const auto oid = t.parse_number<ObjectId>(item.substr(0, colon));
                    const auto vt = item.substr(colon + 1);
                    m.updates.emplace_back(oid, vt == "nil" ? Value::empty() : Value{t.parse_number<std::int64_t>(vt)});
                    b = e + 1;
                }
            }
            h.meta.push_back(std::move(m));
        } else if (tag == "Z") {
            const auto ne = t.number<std::size_t>();
            const auto nm = t.number<std::size_t>();
            if (ne != h.events.size() || nm != h.meta.size()) t.fail("trailer counts do not match the content");
            trailer = true;
        } else {
            t.fail("unknown record '" + std::string(tag) + "'");
        }
        if (tag != "Z") t.end();
    }
    if (!header) throw InputError("empty history file");
    if (!trailer) throw InputError("history is truncated (no trailer)");
    return h;
}

void save_history(const std::string& path, const THistory& h) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw InputError("cannot write history '" + path + "'");
    write_history(out, h);
}

THistory load_history(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw InputError("cannot open history '" + path + "'");
    return read_history(in);
}

}  // namespace htr::checker
