#include "ulv/pickle.hpp"

#include <cstring>
#include <fstream>
#include <sstream>
#include <unordered_map>

#include "ulv/errors.hpp"

namespace ulv::pickle {

namespace {

ValuePtr make(Value::Kind k) {
  auto v = std::make_shared<Value>();
  v->kind = k;
  return v;
}

ValuePtr make_int(int64_t i) {
  auto v = make(Value::Kind::Int);
  v->i = i;
  return v;
}

ValuePtr make_str(std::string s) {
  auto v = make(Value::Kind::Str);
  v->s = std::move(s);
  return v;
}

class Reader {
 public:
  explicit Reader(std::string_view d) : d_(d) {}

  uint8_t u8() {
    need(1);
    return static_cast<uint8_t>(d_[pos_++]);
  }

  std::string_view read(size_t n) {
    need(n);
    std::string_view out = d_.substr(pos_, n);
    pos_ += n;
    return out;
  }

  // Text line without the trailing newline.
  std::string_view line() {
    size_t nl = d_.find('\n', pos_);
    if (nl == std::string_view::npos)
      throw ParseError("pickle: unterminated text line");
    std::string_view out = d_.substr(pos_, nl - pos_);
    pos_ = nl + 1;
    return out;
  }

  uint16_t u16le() {
    auto b = read(2);
    return static_cast<uint16_t>(static_cast<uint8_t>(b[0]) | (static_cast<uint8_t>(b[1]) << 8));
  }

  uint32_t u32le() {
    auto b = read(4);
    uint32_t x = 0;
    for (int i = 3; i >= 0; --i) x = (x << 8) | static_cast<uint8_t>(b[i]);
    return x;
  }

  uint64_t u64le() {
    auto b = read(8);
    uint64_t x = 0;
    for (int i = 7; i >= 0; --i) x = (x << 8) | static_cast<uint8_t>(b[i]);
    return x;
  }

  double f64be() {
    auto b = read(8);
    uint64_t x = 0;
    for (int i = 0; i < 8; ++i) x = (x << 8) | static_cast<uint8_t>(b[i]);
    double out;
    std::memcpy(&out, &x, 8);
    return out;
  }

  bool done() const { return pos_ >= d_.size(); }
  size_t pos() const { return pos_; }

 private:
  void need(size_t n) {
    if (d_.size() - pos_ < n) throw ParseError("pickle: truncated stream");
  }

  std::string_view d_;
  size_t pos_ = 0;
};

int64_t parse_decimal(std::string_view t, const char* what) {
  if (!t.empty() && (t.back() == 'L' || t.back() == 'l')) t.remove_suffix(1);
  if (t.empty()) throw ParseError(std::string("pickle: empty ") + what);
  errno = 0;
  char* end = nullptr;
  std::string tmp(t);
  long long v = std::strtoll(tmp.c_str(), &end, 10);
  if (errno != 0 || end != tmp.c_str() + tmp.size())
    throw ParseError(std::string("pickle: bad ") + what + " '" + tmp + "'");
  return v;
}

// Decodes the py2 repr-style escapes used by the STRING opcode.
std::string decode_string_escapes(std::string_view t) {
  std::string out;
  out.reserve(t.size());
  for (size_t i = 0; i < t.size(); ++i) {
    char c = t[i];
    if (c != '\\') {
      out.push_back(c);
      continue;
    }
    if (++i >= t.size()) throw ParseError("pickle: dangling backslash in string");
    char e = t[i];
    switch (e) {
      case '\\': out.push_back('\\'); break;
      case '\'': out.push_back('\''); break;
      case '"': out.push_back('"'); break;
      case 'n': out.push_back('\n'); break;
      case 'r': out.push_back('\r'); break;
      case 't': out.push_back('\t'); break;
      case '0': out.push_back('\0'); break;
      case 'x': {
        if (i + 2 >= t.size()) throw ParseError("pickle: truncated \\x escape");
        auto hex = [](char h) -> int {
          if (h >= '0' && h <= '9') return h - '0';
          if (h >= 'a' && h <= 'f') return h - 'a' + 10;
          if (h >= 'A' && h <= 'F') return h - 'A' + 10;
          throw ParseError("pickle: bad hex digit in \\x escape");
        };
        out.push_back(static_cast<char>(hex(t[i + 1]) * 16 + hex(t[i + 2])));
        i += 2;
        break;
      }
      default:
        throw ParseError(std::string("pickle: unsupported string escape \\") + e);
    }
  }
  return out;
}

// raw-unicode-escape to utf-8, so Str values carry one uniform encoding.
std::string decode_raw_unicode_escape(std::string_view t) {
  std::string out;
  out.reserve(t.size());
  auto put = [&out](unsigned cp) {
    if (cp < 0x80) {
      out.push_back(static_cast<char>(cp));
    } else if (cp < 0x800) {
      out.push_back(static_cast<char>(0xC0u | (cp >> 6)));
      out.push_back(static_cast<char>(0x80u | (cp & 0x3Fu)));
    } else {
      out.push_back(static_cast<char>(0xE0u | (cp >> 12)));
      out.push_back(static_cast<char>(0x80u | ((cp >> 6) & 0x3Fu)));
      out.push_back(static_cast<char>(0x80u | (cp & 0x3Fu)));
    }
  };
  for (size_t i = 0; i < t.size(); ++i) {
    if (t[i] == '\\' && i + 5 < t.size() && t[i + 1] == 'u') {
      unsigned cp = 0;
      for (int k = 0; k < 4; ++k) {
        char h = t[i + 2 + k];
        cp <<= 4;
        if (h >= '0' && h <= '9') cp |= static_cast<unsigned>(h - '0');
        else if (h >= 'a' && h <= 'f') cp |= static_cast<unsigned>(h - 'a' + 10);
        else if (h >= 'A' && h <= 'F') cp |= static_cast<unsigned>(h - 'A' + 10);
        else throw ParseError("pickle: bad \\u escape");
      }
      put(cp);
      i += 5;
    } else {
      // bare bytes encode the code points U+0000..U+00FF directly
      put(static_cast<uint8_t>(t[i]));
    }
  }
  return out;
}

// utf-8 to latin-1, for _codecs.encode(str, 'latin1') payloads.
std::string utf8_to_latin1(std::string_view t) {
  std::string out;
  out.reserve(t.size());
  for (size_t i = 0; i < t.size();) {
    uint8_t b = static_cast<uint8_t>(t[i]);
    if (b < 0x80) {
      out.push_back(static_cast<char>(b));
      i += 1;
    } else if ((b == 0xC2 || b == 0xC3) && i + 1 < t.size()) {
      uint8_t b2 = static_cast<uint8_t>(t[i + 1]);
      if ((b2 & 0xC0) != 0x80) throw ParseError("pickle: invalid utf-8 continuation");
      out.push_back(static_cast<char>(((b & 0x1Fu) << 6) | (b2 & 0x3Fu)));
      i += 2;
    } else {
      throw ParseError("pickle: byte payload outside latin-1 range");
    }
  }
  return out;
}

void parse_dtype_descr(std::string_view descr, Value& out) {
  if (!descr.empty() && (descr[0] == '<' || descr[0] == '>' || descr[0] == '|' || descr[0] == '=')) {
    out.dtype_big = (descr[0] == '>');
    descr.remove_prefix(1);
  }
  static const std::unordered_map<std::string_view, std::pair<char, int>> names = {
      {"float32", {'f', 4}}, {"float64", {'f', 8}}, {"int8", {'i', 1}},   {"int16", {'i', 2}},
      {"int32", {'i', 4}},   {"int64", {'i', 8}},   {"uint8", {'u', 1}},  {"uint16", {'u', 2}},
      {"uint32", {'u', 4}},  {"uint64", {'u', 8}},  {"bool", {'b', 1}},   {"bool_", {'b', 1}},
  };
  if (auto it = names.find(descr); it != names.end()) {
    out.dtype_kind = it->second.first;
    out.dtype_itemsize = it->second.second;
    return;
  }
  if (descr.size() >= 2 && (descr[0] == 'f' || descr[0] == 'i' || descr[0] == 'u' || descr[0] == 'b')) {
    int size = 0;
    for (size_t k = 1; k < descr.size(); ++k) {
      if (descr[k] < '0' || descr[k] > '9') { size = -1; break; }
      size = size * 10 + (descr[k] - '0');
    }
    if (size >= 1 && size <= 8) {
      out.dtype_kind = descr[0];
      out.dtype_itemsize = size;
      return;
    }
  }
  if (descr == "b1") {
    out.dtype_kind = 'b';
    out.dtype_itemsize = 1;
    return;
  }
  throw ParseError("pickle: unsupported dtype '" + std::string(descr) + "'");
}

bool global_is(const ValuePtr& g, std::string_view name_suffix) {
  if (!g || g->kind != Value::Kind::Global) return false;
  const std::string& n = g->name;
  return n.size() >= name_suffix.size() &&
         std::string_view(n).substr(n.size() - name_suffix.size()) == name_suffix;
}

class Machine {
 public:
  explicit Machine(std::string_view data) : r_(data) {}

  ValuePtr run() {
    for (;;) {
      if (r_.done()) throw ParseError("pickle: stream ended before STOP");
      uint8_t op = r_.u8();
      switch (op) {
        case 0x80:  // PROTO
          r_.u8();
          break;
        case 0x95:  // FRAME
          r_.u64le();
          break;
        case '.':  // STOP
          if (stack_.empty()) throw ParseError("pickle: STOP with empty stack");
          return stack_.back();

        case '(':  // MARK
          marks_.push_back(stack_.size());
          break;
        case '0':  // POP
          pop();
          break;
        case '1':  // POP_MARK
          pop_to_mark();
          break;
        case '2':  // DUP
          push(top());
          break;

        case 'N': push(make(Value::Kind::None)); break;
        case 0x88: { auto v = make(Value::Kind::Bool); v->b = true; push(v); break; }
        case 0x89: { auto v = make(Value::Kind::Bool); v->b = false; push(v); break; }

        case 'I': {  // INT, also py2 booleans
          auto t = r_.line();
          if (t == "01") { auto v = make(Value::Kind::Bool); v->b = true; push(v); }
          else if (t == "00") { auto v = make(Value::Kind::Bool); v->b = false; push(v); }
          else push(make_int(parse_decimal(t, "INT")));
          break;
        }
        case 'L': push(make_int(parse_decimal(r_.line(), "LONG"))); break;
        case 'J': push(make_int(static_cast<int32_t>(r_.u32le()))); break;
        case 'K': push(make_int(r_.u8())); break;
        case 'M': push(make_int(r_.u16le())); break;
        case 0x8a: {  // LONG1
          size_t n = r_.u8();
          push(make_int(read_le_long(n)));
          break;
        }
        case 0x8b: {  // LONG4
          size_t n = r_.u32le();
          push(make_int(read_le_long(n)));
          break;
        }

        case 'F': {
          auto t = r_.line();
          auto v = make(Value::Kind::Float);
          v->f = std::stod(std::string(t));
          push(v);
          break;
        }
        case 'G': {
          auto v = make(Value::Kind::Float);
          v->f = r_.f64be();
          push(v);
          break;
        }

        case 'S': {  // STRING: quoted repr line
          auto t = r_.line();
          if (t.size() < 2 || (t.front() != '\'' && t.front() != '"') || t.back() != t.front())
            throw ParseError("pickle: malformed STRING literal");
          push(make_str(decode_string_escapes(t.substr(1, t.size() - 2))));
          break;
        }
        case 'U': push(make_str(std::string(r_.read(r_.u8())))); break;          // SHORT_BINSTRING
        case 'T': push(make_str(std::string(r_.read(r_.u32le())))); break;       // BINSTRING
        case 'V': push(make_str(decode_raw_unicode_escape(r_.line()))); break;   // UNICODE
        case 'X': push(make_str(std::string(r_.read(r_.u32le())))); break;       // BINUNICODE
        case 0x8c: push(make_str(std::string(r_.read(r_.u8())))); break;         // SHORT_BINUNICODE
        case 0x8d: push(make_str(std::string(r_.read(r_.u64le())))); break;      // BINUNICODE8
        case 'C': push(make_str(std::string(r_.read(r_.u8())))); break;          // SHORT_BINBYTES
        case 'B': push(make_str(std::string(r_.read(r_.u32le())))); break;       // BINBYTES
        case 0x8e: push(make_str(std::string(r_.read(r_.u64le())))); break;      // BINBYTES8
        case 0x96: push(make_str(std::string(r_.read(r_.u64le())))); break;      // BYTEARRAY8

        case ')': push(make(Value::Kind::Tuple)); break;
        case ']': push(make(Value::Kind::List)); break;
        case '}': push(make(Value::Kind::Dict)); break;
        case 0x8f: push(make(Value::Kind::List)); break;  // EMPTY_SET, order-preserving stand-in

        case 't': {  // TUPLE
          auto elems = pop_to_mark();
          auto v = make(Value::Kind::Tuple);
          v->seq = std::move(elems);
          push(v);
          break;
        }
        case 0x85: { auto v = make(Value::Kind::Tuple); v->seq = {pop()}; push(v); break; }
        case 0x86: {
          auto v = make(Value::Kind::Tuple);
          auto b = pop(); auto a = pop();
          v->seq = {a, b};
          push(v);
          break;
        }
        case 0x87: {
          auto v = make(Value::Kind::Tuple);
          auto c = pop(); auto b = pop(); auto a = pop();
          v->seq = {a, b, c};
          push(v);
          break;
        }
        case 'l': {  // LIST
          auto elems = pop_to_mark();
          auto v = make(Value::Kind::List);
          v->seq = std::move(elems);
          push(v);
          break;
        }
        case 'd': {  // DICT
          auto elems = pop_to_mark();
          if (elems.size() % 2 != 0) throw ParseError("pickle: odd DICT item count");
          auto v = make(Value::Kind::Dict);
          for (size_t i = 0; i < elems.size(); i += 2) v->items.emplace_back(elems[i], elems[i + 1]);
          push(v);
          break;
        }

        case 'a': {  // APPEND
          auto x = pop();
          auto& lst = top();
          if (lst->kind != Value::Kind::List) throw ParseError("pickle: APPEND to non-list");
          lst->seq.push_back(x);
          break;
        }
        case 'e': {  // APPENDS
          auto elems = pop_to_mark();
          auto& lst = top();
          if (lst->kind != Value::Kind::List) throw ParseError("pickle: APPENDS to non-list");
          lst->seq.insert(lst->seq.end(), elems.begin(), elems.end());
          break;
        }
        case 's': {  // SETITEM
          auto val = pop();
          auto key = pop();
          auto& d = top();
          if (d->kind != Value::Kind::Dict) throw ParseError("pickle: SETITEM on non-dict");
          d->items.emplace_back(key, val);
          break;
        }
        case 'u': {  // SETITEMS
          auto elems = pop_to_mark();
          if (elems.size() % 2 != 0) throw ParseError("pickle: odd SETITEMS count");
          auto& d = top();
          if (d->kind != Value::Kind::Dict) throw ParseError("pickle: SETITEMS on non-dict");
          for (size_t i = 0; i < elems.size(); i += 2) d->items.emplace_back(elems[i], elems[i + 1]);
          break;
        }

        case 'g': memo_get(static_cast<uint32_t>(parse_decimal(r_.line(), "GET index"))); break;
        case 'h': memo_get(r_.u8()); break;
        case 'j': memo_get(r_.u32le()); break;
        case 'p': memo_[static_cast<uint32_t>(parse_decimal(r_.line(), "PUT index"))] = top(); break;
        case 'q': memo_[r_.u8()] = top(); break;
        case 'r': memo_[r_.u32le()] = top(); break;
        case 0x94: memo_[next_memo_++] = top(); break;  // MEMOIZE

        case 'c': {  // GLOBAL
          auto v = make(Value::Kind::Global);
          v->module = std::string(r_.line());
          v->name = std::string(r_.line());
          push(v);
          break;
        }
        case 0x93: {  // STACK_GLOBAL
          auto name = pop();
          auto module = pop();
          if (name->kind != Value::Kind::Str || module->kind != Value::Kind::Str)
            throw ParseError("pickle: STACK_GLOBAL expects two strings");
          auto v = make(Value::Kind::Global);
          v->module = module->s;
          v->name = name->s;
          push(v);
          break;
        }

        case 'R': apply_reduce(); break;
        case 0x81: {  // NEWOBJ
          auto args = pop();
          auto cls = pop();
          push(new_object(cls, args));
          break;
        }
        case 0x92: {  // NEWOBJ_EX
          pop();  // kwargs
          auto args = pop();
          auto cls = pop();
          push(new_object(cls, args));
          break;
        }
        case 'b': apply_build(); break;

        default: {
          std::ostringstream os;
          os << "pickle: unsupported opcode 0x" << std::hex << int(op) << " at offset " << std::dec
             << (r_.pos() - 1);
          throw ParseError(os.str());
        }
      }
      // PUT family uses explicit memo counter alignment for protocol 0/1 streams
      if (op == 'p' || op == 'q' || op == 'r') {
        if (memo_.size() > next_memo_) next_memo_ = static_cast<uint32_t>(memo_.size());
      }
    }
  }

 private:
  void push(ValuePtr v) { stack_.push_back(std::move(v)); }

  ValuePtr pop() {
    if (stack_.empty()) throw ParseError("pickle: stack underflow");
    auto v = std::move(stack_.back());
    stack_.pop_back();
    return v;
  }

  ValuePtr& top() {
    if (stack_.empty()) throw ParseError("pickle: stack underflow");
    return stack_.back();
  }

  std::vector<ValuePtr> pop_to_mark() {
    if (marks_.empty()) throw ParseError("pickle: no mark on stack");
    size_t m = marks_.back();
    marks_.pop_back();
    if (m > stack_.size()) throw ParseError("pickle: corrupt mark");
    std::vector<ValuePtr> out(stack_.begin() + static_cast<ptrdiff_t>(m), stack_.end());
    stack_.resize(m);
    return out;
  }

  void memo_get(uint32_t idx) {
    auto it = memo_.find(idx);
    if (it == memo_.end()) throw ParseError("pickle: memo miss at index " + std::to_string(idx));
    push(it->second);
  }

  int64_t read_le_long(size_t n) {
    if (n == 0) return 0;
    if (n > 8) throw ParseError("pickle: LONG wider than 64 bits");
    auto b = r_.read(n);
    uint64_t x = 0;
    for (size_t i = 0; i < n; ++i) x |= static_cast<uint64_t>(static_cast<uint8_t>(b[i])) << (8 * i);
    if (static_cast<uint8_t>(b[n - 1]) & 0x80) {  // sign extend
      for (size_t i = n; i < 8; ++i) x |= 0xFFull << (8 * i);
    }
    return static_cast<int64_t>(x);
  }

  ValuePtr new_object(const ValuePtr& cls, const ValuePtr& args) {
    (void)args;
    if (cls->kind != Value::Kind::Global)
      throw ParseError("pickle: NEWOBJ on non-global");
    auto obj = make(Value::Kind::Reduced);
    obj->cls = cls;
    return obj;
  }

  void apply_reduce() {
    auto args = pop();
    auto callable = pop();
    if (callable->kind != Value::Kind::Global)
      throw ParseError("pickle: REDUCE of non-global callable");
    if (args->kind != Value::Kind::Tuple)
      throw ParseError("pickle: REDUCE args must be a tuple");
    const std::string& name = callable->name;

    if (name == "_reconstruct" || name == "_reconstructor") {
      if (args->seq.empty()) throw ParseError("pickle: _reconstruct without class");
      auto obj = make(Value::Kind::Reduced);
      obj->cls = args->seq[0];
      push(obj);
      return;
    }
    if (name == "dtype") {
      if (args->seq.empty() || args->seq[0]->kind != Value::Kind::Str)
        throw ParseError("pickle: dtype without descriptor string");
      auto v = make(Value::Kind::Dtype);
      parse_dtype_descr(args->seq[0]->s, *v);
      push(v);
      return;
    }
    if (name == "defaultdict") {
      push(make(Value::Kind::Dict));
      return;
    }
    if (name == "encode" && callable->module == "_codecs") {
      if (args->seq.empty() || args->seq[0]->kind != Value::Kind::Str)
        throw ParseError("pickle: _codecs.encode without payload");
      std::string codec = args->seq.size() > 1 && args->seq[1]->kind == Value::Kind::Str
                              ? args->seq[1]->s
                              : "latin1";
      if (codec != "latin1" && codec != "latin-1" && codec != "latin_1")
        throw ParseError("pickle: unsupported codec '" + codec + "'");
      push(make_str(utf8_to_latin1(args->seq[0]->s)));
      return;
    }
    if (name == "_frombuffer") {
      // numpy >= 1.26 pickling path: (buffer, dtype, shape, order)
      if (args->seq.size() < 3) throw ParseError("pickle: _frombuffer arity");
      auto v = make(Value::Kind::Array);
      fill_array_from_parts(*v, args->seq[1], args->seq[2], args->seq[0],
                            args->seq.size() > 3 ? args->seq[3] : nullptr);
      push(v);
      return;
    }
    if (name.size() >= 10 && name.substr(name.size() - 10) == "csr_matrix") {
      auto obj = make(Value::Kind::Reduced);
      obj->cls = callable;
      push(obj);
      return;
    }
    throw ParseError("pickle: unsupported callable " + callable->module + "." + name);
  }

  static size_t shape_count(const std::vector<size_t>& shape) {
    size_t c = 1;
    for (size_t s : shape) c *= s;
    return c;
  }

  static std::vector<size_t> tuple_to_shape(const ValuePtr& t) {
    if (!t || t->kind != Value::Kind::Tuple) throw ParseError("pickle: array shape is not a tuple");
    std::vector<size_t> shape;
    for (const auto& e : t->seq) {
      if (e->kind != Value::Kind::Int || e->i < 0)
        throw ParseError("pickle: array shape entry is not a non-negative int");
      shape.push_back(static_cast<size_t>(e->i));
    }
    return shape;
  }

  static void fill_array_from_parts(Value& out, const ValuePtr& dtype, const ValuePtr& shape,
                                    const ValuePtr& data, const ValuePtr& order) {
    if (!dtype || dtype->kind != Value::Kind::Dtype)
      throw ParseError("pickle: array dtype missing");
    out.array.kind = dtype->dtype_kind;
    out.array.itemsize = dtype->dtype_itemsize;
    out.array.big_endian = dtype->dtype_big;
    out.array.shape = tuple_to_shape(shape);
    if (!data || data->kind != Value::Kind::Str)
      throw ParseError("pickle: array data is not a byte string");
    out.array.raw = data->s;
    out.array.fortran = false;
    if (order) {
      if (order->kind == Value::Kind::Str) out.array.fortran = (order->s == "F");
      else if (order->kind == Value::Kind::Bool) out.array.fortran = order->b;
      else if (order->kind == Value::Kind::Int) out.array.fortran = order->i != 0;
    }
    size_t expect = shape_count(out.array.shape) * static_cast<size_t>(out.array.itemsize);
    if (out.array.raw.size() != expect)
      throw ParseError("pickle: array byte length " + std::to_string(out.array.raw.size()) +
                       " does not match shape (expected " + std::to_string(expect) + ")");
  }

  void apply_build() {
    auto state = pop();
    auto& obj = top();
    if (obj->kind == Value::Kind::Reduced && global_is(obj->cls, "ndarray")) {
      if (state->kind != Value::Kind::Tuple || state->seq.size() < 5)
        throw ParseError("pickle: unexpected ndarray state");
      Value rebuilt;
      rebuilt.kind = Value::Kind::Array;
      fill_array_from_parts(rebuilt, state->seq[2], state->seq[1], state->seq[4], state->seq[3]);
      *obj = std::move(rebuilt);  // in place, memo references stay valid
      return;
    }
    if (obj->kind == Value::Kind::Dtype) {
      if (state->kind == Value::Kind::Tuple && state->seq.size() >= 2 &&
          state->seq[1]->kind == Value::Kind::Str && !state->seq[1]->s.empty())
        obj->dtype_big = (state->seq[1]->s[0] == '>');
      return;
    }
    // csr_matrix and anything else: keep the state for later interpretation
    obj->state = state;
  }

  Reader r_;
  std::vector<ValuePtr> stack_;
  std::vector<size_t> marks_;
  std::unordered_map<uint32_t, ValuePtr> memo_;
  uint32_t next_memo_ = 0;
};

const ValuePtr* dict_find(const Value& d, std::string_view key) {
  for (const auto& [k, v] : d.items)
    if (k->kind == Value::Kind::Str && k->s == key) return &v;
  return nullptr;
}

}  // namespace

size_t NdArray::count() const {
  size_t c = 1;
  for (size_t s : shape) c *= s;
  return c;
}

double NdArray::get_double(size_t flat) const {
  size_t off = flat * static_cast<size_t>(itemsize);
  if (off + static_cast<size_t>(itemsize) > raw.size())
    throw ParseError("pickle: array index out of range");
  unsigned char buf[8];
  std::memcpy(buf, raw.data() + off, static_cast<size_t>(itemsize));
  if (big_endian)
    for (int i = 0, j = itemsize - 1; i < j; ++i, --j) std::swap(buf[i], buf[j]);
  if (kind == 'f') {
    if (itemsize == 4) {
      float f;
      std::memcpy(&f, buf, 4);
      return static_cast<double>(f);
    }
    if (itemsize == 8) {
      double d;
      std::memcpy(&d, buf, 8);
      return d;
    }
    throw ParseError("pickle: unsupported float width");
  }
  return static_cast<double>(get_int(flat));
}

int64_t NdArray::get_int(size_t flat) const {
  size_t off = flat * static_cast<size_t>(itemsize);
  if (off + static_cast<size_t>(itemsize) > raw.size())
    throw ParseError("pickle: array index out of range");
  unsigned char buf[8];
  std::memcpy(buf, raw.data() + off, static_cast<size_t>(itemsize));
  if (big_endian)
    for (int i = 0, j = itemsize - 1; i < j; ++i, --j) std::swap(buf[i], buf[j]);
  if (kind == 'f') {
    double d = get_double(flat);
    return static_cast<int64_t>(d);
  }
  uint64_t x = 0;
  for (int i = itemsize - 1; i >= 0; --i) x = (x << 8) | buf[i];
  if (kind == 'i' && itemsize < 8 && (buf[itemsize - 1] & 0x80))
    for (int i = itemsize; i < 8; ++i) x |= 0xFFull << (8 * i);
  if (kind == 'b') return x != 0 ? 1 : 0;
  return static_cast<int64_t>(x);
}

double NdArray::at(size_t i, size_t j) const {
  if (shape.size() != 2) throw ParseError("pickle: 2-d access on non 2-d array");
  size_t flat = fortran ? j * shape[0] + i : i * shape[1] + j;
  return get_double(flat);
}

ValuePtr parse(std::string_view data) {
  Machine m(data);
  return m.run();
}

ValuePtr parse_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open " + path.string());
  std::ostringstream buf;
  buf << in.rdbuf();
  std::string data = buf.str();
  try {
    return parse(data);
  } catch (const ParseError& e) {
    throw ParseError(path.string() + ": " + e.what());
  }
}

CsrMatrix as_csr(const ValuePtr& v) {
  if (!v || v->kind != Value::Kind::Reduced || !global_is(v->cls, "csr_matrix") || !v->state)
    throw ParseError("pickle: value is not a csr_matrix");
  const Value& st = *v->state;
  if (st.kind != Value::Kind::Dict) throw ParseError("pickle: csr_matrix state is not a dict");
  const ValuePtr* shape = dict_find(st, "_shape");
  if (!shape) shape = dict_find(st, "shape");
  const ValuePtr* data = dict_find(st, "data");
  const ValuePtr* indices = dict_find(st, "indices");
  const ValuePtr* indptr = dict_find(st, "indptr");
  if (!shape || !data || !indices || !indptr)
    throw ParseError("pickle: csr_matrix state missing fields");
  if ((*shape)->kind != Value::Kind::Tuple || (*shape)->seq.size() != 2)
    throw ParseError("pickle: csr_matrix shape is not a pair");

  CsrMatrix out;
  out.rows = static_cast<size_t>((*shape)->seq[0]->i);
  out.cols = static_cast<size_t>((*shape)->seq[1]->i);
  const NdArray& nd_data = as_array(*data);
  const NdArray& nd_indices = as_array(*indices);
  const NdArray& nd_indptr = as_array(*indptr);
  out.data.resize(nd_data.count());
  for (size_t i = 0; i < out.data.size(); ++i) out.data[i] = nd_data.get_double(i);
  out.indices.resize(nd_indices.count());
  for (size_t i = 0; i < out.indices.size(); ++i) out.indices[i] = nd_indices.get_int(i);
  out.indptr.resize(nd_indptr.count());
  for (size_t i = 0; i < out.indptr.size(); ++i) out.indptr[i] = nd_indptr.get_int(i);

  if (out.indptr.size() != out.rows + 1)
    throw ParseError("pickle: csr_matrix indptr length mismatch");
  if (out.indptr.front() != 0 || out.indptr.back() != static_cast<int64_t>(out.indices.size()) ||
      out.indices.size() != out.data.size())
    throw ParseError("pickle: csr_matrix index arrays inconsistent");
  for (size_t r = 0; r < out.rows; ++r)
    if (out.indptr[r] > out.indptr[r + 1]) throw ParseError("pickle: csr_matrix indptr not monotone");
  for (int64_t c : out.indices)
    if (c < 0 || c >= static_cast<int64_t>(out.cols))
      throw ParseError("pickle: csr_matrix column index out of range");
  return out;
}

const NdArray& as_array(const ValuePtr& v) {
  if (!v || v->kind != Value::Kind::Array) throw ParseError("pickle: value is not an ndarray");
  return v->array;
}

std::map<int64_t, std::vector<int64_t>> as_int_adjacency(const ValuePtr& v) {
  if (!v || v->kind != Value::Kind::Dict) throw ParseError("pickle: value is not a dict");
  std::map<int64_t, std::vector<int64_t>> out;
  for (const auto& [k, val] : v->items) {
    if (k->kind != Value::Kind::Int) throw ParseError("pickle: adjacency key is not an int");
    if (val->kind != Value::Kind::List && val->kind != Value::Kind::Tuple)
      throw ParseError("pickle: adjacency value is not a list");
    std::vector<int64_t> nbrs;
    nbrs.reserve(val->seq.size());
    for (const auto& e : val->seq) {
      if (e->kind != Value::Kind::Int) throw ParseError("pickle: adjacency entry is not an int");
      nbrs.push_back(e->i);
    }
    out[k->i] = std::move(nbrs);  // later duplicate keys win, matching dict semantics
  }
  return out;
}

}  // namespace ulv::pickle
