#include "ulv/kernels.hpp"

#include <cstdlib>

namespace ulv::kern {

#if !(defined(__x86_64__) || defined(__i386__))
const KernelTable* avx2_table() { return nullptr; }
#endif

#if !(defined(__aarch64__) || defined(__ARM_NEON))
const KernelTable* neon_table() { return nullptr; }
#endif

std::vector<const KernelTable*> available_tables() {
  std::vector<const KernelTable*> out{&scalar_table()};
  if (const KernelTable* t = avx2_table()) out.push_back(t);
  if (const KernelTable* t = neon_table()) out.push_back(t);
  return out;
}

namespace {

const KernelTable* find(std::string_view name) {
  for (const KernelTable* t : available_tables()) {
    if (name == t->name) return t;
  }
  return nullptr;
}

const KernelTable* initial_selection() {
  if (const char* env = std::getenv("ULV_KERNELS")) {
    if (const KernelTable* t = find(env)) return t;
  }
  if (const KernelTable* t = avx2_table()) return t;
  if (const KernelTable* t = neon_table()) return t;
  return &scalar_table();
}

const KernelTable*& selected() {
  static const KernelTable* sel = initial_selection();
  return sel;
}

}  // namespace

const KernelTable& active() { return *selected(); }

bool set_backend(std::string_view name) {
  if (const KernelTable* t = find(name)) {
    selected() = t;
    return true;
  }
  return false;
}

}  // namespace ulv::kern
