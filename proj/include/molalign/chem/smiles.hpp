#pragma once

#include <cctype>
#include <optional>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

#include "molalign/chem/molecule.hpp"
#include "molalign/util/errors.hpp"

namespace molalign::chem {

namespace detail {

struct PendingBond {
  BondOrder order = BondOrder::kSingle;
  BondDirection direction = BondDirection::kNone;
  bool explicit_order = false;
};

inline BondDirection flip_direction(BondDirection d) {
  if (d == BondDirection::kUp)
    return BondDirection::kDown;
  if (d == BondDirection::kDown)
    return BondDirection::kUp;
  return BondDirection::kNone;
}

class SmilesParser {
public:
  explicit SmilesParser(std::string_view text) : text_(text) {}

  Molecule parse() {
    while (pos_ < text_.size())
      step();
    finish();
    return std::move(mol_);
  }

private:
  struct RingOpening {
    int atom = -1;
    PendingBond bond;
    bool has_bond = false;
  };

  std::string_view text_;
  std::size_t pos_ = 0;
  Molecule mol_;
  int prev_atom_ = -1;
  std::optional<PendingBond> pending_;
  std::vector<int> branch_stack_;
  std::unordered_map<int, RingOpening> open_rings_;

  [[noreturn]] void fail(const std::string &what) const {
    throw ParseError("SMILES \"" + std::string(text_) + "\" at position " + std::to_string(pos_) +
                     ": " + what);
  }

  char peek() const { return pos_ < text_.size() ? text_[pos_] : '\0'; }

  void step() {
    char c = text_[pos_];
    switch (c) {
    case '-': case '=': case '#': case ':': case '/': case '\\':
      read_bond(c);
      break;
    case '(':
      if (prev_atom_ < 0)
        fail("branch with no preceding atom");
      if (pending_)
        fail("bond symbol before '('");
      branch_stack_.push_back(prev_atom_);
      ++pos_;
      break;
    case ')':
      if (branch_stack_.empty())
        fail("unbalanced parentheses: ')' without matching '('");
      if (pending_)
        fail("dangling bond before ')'");
      prev_atom_ = branch_stack_.back();
      branch_stack_.pop_back();
      ++pos_;
      break;
    case '.':
      if (pending_)
        fail("dangling bond before '.'");
      prev_atom_ = -1;
      ++pos_;
      break;
    case '%':
      read_ring_closure();
      break;
    case '[':
      read_bracket_atom();
      break;
    default:
      if (std::isdigit(static_cast<unsigned char>(c)))
        read_ring_closure();
      else if (std::isspace(static_cast<unsigned char>(c)))
        fail("whitespace inside SMILES");
      else
        read_organic_atom();
      break;
    }
  }

  void read_bond(char c) {
    if (pending_)
      fail("two bond symbols in a row");
    if (prev_atom_ < 0)
      fail("bond symbol with no preceding atom");
    PendingBond b;
    b.explicit_order = true;
    switch (c) {
    case '-': b.order = BondOrder::kSingle; break;
    case '=': b.order = BondOrder::kDouble; break;
    case '#': b.order = BondOrder::kTriple; break;
    case ':': b.order = BondOrder::kAromatic; break;
    case '/':
      b.order = BondOrder::kSingle;
      b.direction = BondDirection::kUp;
      break;
    case '\\':
      b.order = BondOrder::kSingle;
      b.direction = BondDirection::kDown;
      break;
    }
    pending_ = b;
    ++pos_;
  }

  void read_ring_closure() {
    if (prev_atom_ < 0)
      fail("ring closure digit with no preceding atom");
    int number;
    if (text_[pos_] == '%') {
      if (pos_ + 2 >= text_.size() || !std::isdigit(static_cast<unsigned char>(text_[pos_ + 1])) ||
          !std::isdigit(static_cast<unsigned char>(text_[pos_ + 2])))
        fail("'%' ring closure needs two digits");
      number = (text_[pos_ + 1] - '0') * 10 + (text_[pos_ + 2] - '0');
      pos_ += 3;
    } else {
      number = text_[pos_] - '0';
      ++pos_;
    }

    auto it = open_rings_.find(number);
    if (it == open_rings_.end()) {
      RingOpening opening;
      opening.atom = prev_atom_;
      if (pending_) {
        opening.bond = *pending_;
        opening.has_bond = true;
        pending_.reset();
      }
      open_rings_.emplace(number, opening);
      return;
    }

    RingOpening opening = it->second;
    open_rings_.erase(it);
    if (opening.atom == prev_atom_)
      fail("ring bond to self");

    PendingBond bond;
    bool has_explicit = false;
    if (opening.has_bond) {
      bond = opening.bond;
      has_explicit = true;
    }
    if (pending_) {
      // Closing-side symbol is written from the closing atom's perspective.
      PendingBond close = *pending_;
      close.direction = flip_direction(close.direction);
      if (has_explicit && (close.order != bond.order))
        fail("conflicting bond orders on ring closure " + std::to_string(number));
      bond = close;
      has_explicit = true;
      pending_.reset();
    }
    add_bond(opening.atom, prev_atom_, has_explicit ? std::optional<PendingBond>(bond) : std::nullopt);
  }

  void read_organic_atom() {
    char c = text_[pos_];
    Atom atom;
    if (std::isupper(static_cast<unsigned char>(c))) {
      std::string symbol(1, c);
      if (pos_ + 1 < text_.size()) {
        char next = text_[pos_ + 1];
        if ((c == 'C' && next == 'l') || (c == 'B' && next == 'r'))
          symbol.push_back(next);
      }
      static const char *organic[] = {"B", "C", "N", "O", "P", "S", "F", "Cl", "Br", "I"};
      bool ok = false;
      for (const char *s : organic)
        if (symbol == s)
          ok = true;
      if (!ok)
        fail("unknown element symbol '" + symbol + "' outside brackets");
      atom.element = symbol;
      atom.atomic_number = *atomic_number_of(symbol);
      pos_ += symbol.size();
    } else {
      static const char aromatic[] = {'b', 'c', 'n', 'o', 'p', 's'};
      bool ok = false;
      for (char a : aromatic)
        if (c == a)
          ok = true;
      if (!ok)
        fail(std::string("unknown element symbol '") + c + "'");
      atom.element = static_cast<char>(std::toupper(static_cast<unsigned char>(c)));
      atom.atomic_number = *atomic_number_of(atom.element);
      atom.aromatic = true;
      ++pos_;
    }
    push_atom(std::move(atom));
  }

  void read_bracket_atom() {
    std::size_t start = pos_;
    ++pos_; // '['
    Atom atom;

    // isotope
    int isotope = 0;
    bool has_isotope = false;
    while (pos_ < text_.size() && std::isdigit(static_cast<unsigned char>(text_[pos_]))) {
      isotope = isotope * 10 + (text_[pos_] - '0');
      has_isotope = true;
      ++pos_;
    }
    if (has_isotope)
      atom.isotope = isotope;

    // element symbol, possibly lowercase aromatic
    if (pos_ >= text_.size())
      fail("unterminated bracket atom");
    char c = text_[pos_];
    if (std::isupper(static_cast<unsigned char>(c))) {
      // Brackets hold exactly one atom, so a trailing lowercase letter can
      // only belong to a two-letter element symbol. Greedy lookup is safe.
      std::string symbol(1, c);
      ++pos_;
      if (pos_ < text_.size() && std::islower(static_cast<unsigned char>(text_[pos_]))) {
        std::string two = symbol + text_[pos_];
        if (atomic_number_of(two).has_value()) {
          symbol = two;
          ++pos_;
        }
      }
      auto an = atomic_number_of(symbol);
      if (!an)
        fail("unknown element symbol '" + symbol + "'");
      atom.element = symbol;
      atom.atomic_number = *an;
    } else if (std::islower(static_cast<unsigned char>(c))) {
      static const char aromatic[] = {'b', 'c', 'n', 'o', 'p', 's'};
      bool ok = false;
      for (char a : aromatic)
        if (c == a)
          ok = true;
      if (!ok)
        fail(std::string("unknown aromatic symbol '") + c + "' in bracket");
      atom.element = static_cast<char>(std::toupper(static_cast<unsigned char>(c)));
      atom.atomic_number = *atomic_number_of(atom.element);
      atom.aromatic = true;
      ++pos_;
    } else {
      fail("expected element symbol in bracket atom");
    }

    // chirality
    if (pos_ < text_.size() && text_[pos_] == '@') {
      ++pos_;
      if (pos_ < text_.size() && text_[pos_] == '@') {
        atom.chirality = Chirality::kClockwise;
        ++pos_;
      } else {
        atom.chirality = Chirality::kCounterclockwise;
      }
    }

    // explicit hydrogens
    int hcount = 0;
    if (pos_ < text_.size() && text_[pos_] == 'H') {
      ++pos_;
      if (pos_ < text_.size() && std::isdigit(static_cast<unsigned char>(text_[pos_]))) {
        hcount = 0;
        while (pos_ < text_.size() && std::isdigit(static_cast<unsigned char>(text_[pos_]))) {
          hcount = hcount * 10 + (text_[pos_] - '0');
          ++pos_;
        }
      } else {
        hcount = 1;
      }
    }
    atom.explicit_h = hcount;

    // charge
    if (pos_ < text_.size() && (text_[pos_] == '+' || text_[pos_] == '-')) {
      char sign = text_[pos_];
      int magnitude = 0;
      while (pos_ < text_.size() && text_[pos_] == sign) {
        ++magnitude;
        ++pos_;
      }
      if (pos_ < text_.size() && std::isdigit(static_cast<unsigned char>(text_[pos_]))) {
        if (magnitude != 1)
          fail("malformed charge");
        magnitude = 0;
        while (pos_ < text_.size() && std::isdigit(static_cast<unsigned char>(text_[pos_]))) {
          magnitude = magnitude * 10 + (text_[pos_] - '0');
          ++pos_;
        }
      }
      atom.formal_charge = sign == '+' ? magnitude : -magnitude;
    }

    if (pos_ >= text_.size() || text_[pos_] != ']') {
      pos_ = start;
      fail("unterminated bracket atom");
    }
    ++pos_; // ']'
    push_atom(std::move(atom));
  }

  void push_atom(Atom atom) {
    mol_.atoms.push_back(std::move(atom));
    int idx = static_cast<int>(mol_.atoms.size()) - 1;
    if (prev_atom_ >= 0) {
      std::optional<PendingBond> bond;
      if (pending_) {
        bond = *pending_;
        pending_.reset();
      }
      add_bond(prev_atom_, idx, bond);
    } else if (pending_) {
      fail("dangling bond before atom with no connection point");
    }
    prev_atom_ = idx;
  }

  void add_bond(int a, int b, std::optional<PendingBond> explicit_bond) {
    for (const Bond &existing : mol_.bonds)
      if ((existing.a == a && existing.b == b) || (existing.a == b && existing.b == a))
        fail("duplicate bond between atoms " + std::to_string(a) + " and " + std::to_string(b));
    Bond bond;
    bond.a = a;
    bond.b = b;
    if (explicit_bond) {
      bond.order = explicit_bond->order;
      bond.direction = explicit_bond->direction;
    } else {
      bool both_aromatic = mol_.atoms[static_cast<std::size_t>(a)].aromatic &&
                           mol_.atoms[static_cast<std::size_t>(b)].aromatic;
      bond.order = both_aromatic ? BondOrder::kAromatic : BondOrder::kSingle;
    }
    if (bond.direction != BondDirection::kNone && bond.order != BondOrder::kSingle)
      fail("bond direction on non-single bond");
    mol_.bonds.push_back(bond);
  }

  void finish() {
    if (pending_)
      fail("dangling bond at end of input");
    if (!branch_stack_.empty())
      fail("unbalanced parentheses: unclosed '('");
    if (!open_rings_.empty()) {
      int number = open_rings_.begin()->first;
      fail("unpaired ring closure digit " + std::to_string(number));
    }
    if (mol_.atoms.empty())
      fail("no atoms");
  }
};

} // namespace detail

inline Molecule parse_smiles(std::string_view smiles) {
  if (smiles.empty())
    throw ParseError("empty input: SMILES string must be non-empty");
  detail::SmilesParser parser(smiles);
  Molecule mol = parser.parse();
  mol.smiles_source = std::string(smiles);
  detail::resolve_implicit_hydrogens(mol);
  detail::mark_ring_bonds(mol);
  return mol;
}

} // namespace molalign::chem
