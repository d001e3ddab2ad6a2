//! Classic Porter suffix-stripping stemmer.
//!
//! Implements the original five-step algorithm over ASCII tokens. Words of
//! length one or two and non-ASCII tokens are returned unchanged. Digits are
//! treated as consonants, so purely numeric tokens pass through untouched.

/// Stems a single lowercase token.
pub fn stem(word: &str) -> String {
    if word.len() <= 2 || !word.is_ascii() {
        return word.to_string();
    }
    let mut s = Stemmer {
        b: word.as_bytes().to_vec(),
        k: word.len() as isize - 1,
        j: 0,
    };
    s.step1ab();
    s.step1c();
    s.step2();
    s.step3();
    s.step4();
    s.step5();
    String::from_utf8(s.b[..=s.k as usize].to_vec()).expect("ascii input stays ascii")
}

struct Stemmer {
    b: Vec<u8>,
    /// Offset of the last letter of the current word.
    k: isize,
    /// Offset of the last letter of the candidate stem once a suffix matched.
    j: isize,
}

impl Stemmer {
    fn at(&self, i: isize) -> u8 {
        self.b[i as usize]
    }

    fn is_consonant(&self, i: isize) -> bool {
        match self.at(i) {
            b'a' | b'e' | b'i' | b'o' | b'u' => false,
            b'y' => {
                if i == 0 {
                    true
                } else {
                    !self.is_consonant(i - 1)
                }
            }
            _ => true,
        }
    }

    /// Number of consonant-vowel sequences in the stem `b[0..=j]`.
    fn measure(&self) -> usize {
        let mut n = 0;
        let mut i = 0;
        loop {
            if i > self.j {
                return n;
            }
            if !self.is_consonant(i) {
                break;
            }
            i += 1;
        }
        i += 1;
        loop {
            loop {
                if i > self.j {
                    return n;
                }
                if self.is_consonant(i) {
                    break;
                }
                i += 1;
            }
            i += 1;
            n += 1;
            loop {
                if i > self.j {
                    return n;
                }
                if !self.is_consonant(i) {
                    break;
                }
                i += 1;
            }
            i += 1;
        }
    }

    fn vowel_in_stem(&self) -> bool {
        (0..=self.j).any(|i| !self.is_consonant(i))
    }

    fn double_consonant(&self, i: isize) -> bool {
        i >= 1 && self.at(i) == self.at(i - 1) && self.is_consonant(i)
    }

    /// True when `b[i-2..=i]` is consonant-vowel-consonant and the final
    /// consonant is not w, x, or y.
    fn cvc(&self, i: isize) -> bool {
        if i < 2 || !self.is_consonant(i) || self.is_consonant(i - 1) || !self.is_consonant(i - 2)
        {
            return false;
        }
        !matches!(self.at(i), b'w' | b'x' | b'y')
    }

    fn ends(&mut self, s: &[u8]) -> bool {
        let len = s.len() as isize;
        if len > self.k + 1 {
            return false;
        }
        let start = (self.k + 1 - len) as usize;
        if &self.b[start..=self.k as usize] != s {
            return false;
        }
        self.j = self.k - len;
        true
    }

    fn set_to(&mut self, s: &[u8]) {
        let start = (self.j + 1) as usize;
        self.b.truncate(start);
        self.b.extend_from_slice(s);
        self.k = self.j + s.len() as isize;
    }

    fn replace_if_measure(&mut self, s: &[u8]) {
        if self.measure() > 0 {
            self.set_to(s);
        }
    }

    /// Plural reduction and -ed/-ing removal with cleanup.
    fn step1ab(&mut self) {
        if self.at(self.k) == b's' {
            if self.ends(b"sses") {
                self.k -= 2;
            } else if self.ends(b"ies") {
                self.set_to(b"i");
            } else if self.at(self.k - 1) != b's' {
                self.k -= 1;
            }
        }
        if self.ends(b"eed") {
            if self.measure() > 0 {
                self.k -= 1;
            }
        } else if (self.ends(b"ed") || self.ends(b"ing")) && self.vowel_in_stem() {
            self.k = self.j;
            if self.ends(b"at") {
                self.set_to(b"ate");
            } else if self.ends(b"bl") {
                self.set_to(b"ble");
            } else if self.ends(b"iz") {
                self.set_to(b"ize");
            } else if self.double_consonant(self.k) {
                self.k -= 1;
                if matches!(self.at(self.k), b'l' | b's' | b'z') {
                    self.k += 1;
                }
            } else if self.measure() == 1 && self.cvc(self.k) {
                self.set_to(b"e");
            }
        }
    }

    fn step1c(&mut self) {
        if self.ends(b"y") && self.vowel_in_stem() {
            self.b[self.k as usize] = b'i';
        }
    }

    fn step2(&mut self) {
        if self.k < 1 {
            return;
        }
        match self.at(self.k - 1) {
            b'a' => {
                if self.ends(b"ational") {
                    self.replace_if_measure(b"ate");
                } else if self.ends(b"tional") {
                    self.replace_if_measure(b"tion");
                }
            }
            b'c' => {
                if self.ends(b"enci") {
                    self.replace_if_measure(b"ence");
                } else if self.ends(b"anci") {
                    self.replace_if_measure(b"ance");
                }
            }
            b'e' => {
                if self.ends(b"izer") {
                    self.replace_if_measure(b"ize");
                }
            }
            b'l' => {
                if self.ends(b"abli") {
                    self.replace_if_measure(b"able");
                } else if self.ends(b"alli") {
                    self.replace_if_measure(b"al");
                } else if self.ends(b"entli") {
                    self.replace_if_measure(b"ent");
                } else if self.ends(b"eli") {
                    self.replace_if_measure(b"e");
                } else if self.ends(b"ousli") {
                    self.replace_if_measure(b"ous");
                }
            }
            b'o' => {
                if self.ends(b"ization") {
                    self.replace_if_measure(b"ize");
                } else if self.ends(b"ation") {
                    self.replace_if_measure(b"ate");
                } else if self.ends(b"ator") {
                    self.replace_if_measure(b"ate");
                }
            }
            b's' => {
                if self.ends(b"alism") {
                    self.replace_if_measure(b"al");
                } else if self.ends(b"iveness") {
                    self.replace_if_measure(b"ive");
                } else if self.ends(b"fulness") {
                    self.replace_if_measure(b"ful");
                } else if self.ends(b"ousness") {
                    self.replace_if_measure(b"ous");
                }
            }
            b't' => {
                if self.ends(b"aliti") {
                    self.replace_if_measure(b"al");
                } else if self.ends(b"iviti") {
                    self.replace_if_measure(b"ive");
                } else if self.ends(b"biliti") {
                    self.replace_if_measure(b"ble");
                }
            }
            _ => {}
        }
    }

    fn step3(&mut self) {
        match self.at(self.k) {
            b'e' => {
                if self.ends(b"icate") {
                    self.replace_if_measure(b"ic");
                } else if self.ends(b"ative") {
                    self.replace_if_measure(b"");
                } else if self.ends(b"alize") {
                    self.replace_if_measure(b"al");
                }
            }
            b'i' => {
                if self.ends(b"iciti") {
                    self.replace_if_measure(b"ic");
                }
            }
            b'l' => {
                if self.ends(b"ical") {
                    self.replace_if_measure(b"ic");
                } else if self.ends(b"ful") {
                    self.replace_if_measure(b"");
                }
            }
            b's' => {
                if self.ends(b"ness") {
                    self.replace_if_measure(b"");
                }
            }
            _ => {}
        }
    }

    fn step4(&mut self) {
        if self.k < 1 {
            return;
        }
        let matched = match self.at(self.k - 1) {
            b'a' => self.ends(b"al"),
            b'c' => self.ends(b"ance") || self.ends(b"ence"),
            b'e' => self.ends(b"er"),
            b'i' => self.ends(b"ic"),
            b'l' => self.ends(b"able") || self.ends(b"ible"),
            b'n' => {
                self.ends(b"ant")
                    || self.ends(b"ement")
                    || self.ends(b"ment")
                    || self.ends(b"ent")
            }
            b'o' => {
                (self.ends(b"ion") && self.j >= 0 && matches!(self.at(self.j), b's' | b't'))
                    || self.ends(b"ou")
            }
            b's' => self.ends(b"ism"),
            b't' => self.ends(b"ate") || self.ends(b"iti"),
            b'u' => self.ends(b"ous"),
            b'v' => self.ends(b"ive"),
            b'z' => self.ends(b"ize"),
            _ => false,
        };
        if matched && self.measure() > 1 {
            self.k = self.j;
        }
    }

    fn step5(&mut self) {
        self.j = self.k;
        if self.at(self.k) == b'e' {
            let m = self.measure();
            if m > 1 || (m == 1 && !self.cvc(self.k - 1)) {
                self.k -= 1;
            }
        }
        if self.at(self.k) == b'l' && self.double_consonant(self.k) && self.measure() > 1 {
            self.k -= 1;
        }
    }
}

#[cfg(test)]
mod tests {
    use super::stem;

    // Expected stems follow the algorithm's reference implementation.
    const ORACLE: &[(&str, &str)] = &[
        ("caresses", "caress"),
        ("ponies", "poni"),
        ("ties", "ti"),
        ("caress", "caress"),
        ("cats", "cat"),
        ("feed", "feed"),
        ("agreed", "agre"),
        ("plastered", "plaster"),
        ("bled", "bled"),
        ("motoring", "motor"),
        ("sing", "sing"),
        ("conflated", "conflat"),
        ("troubled", "troubl"),
        ("sized", "size"),
        ("hopping", "hop"),
        ("tanned", "tan"),
        ("falling", "fall"),
        ("hissing", "hiss"),
        ("fizzed", "fizz"),
        ("failing", "fail"),
        ("filing", "file"),
        ("happy", "happi"),
        ("sky", "sky"),
        ("relational", "relat"),
        ("conditional", "condit"),
        ("rational", "ration"),
        ("valenci", "valenc"),
        ("hesitanci", "hesit"),
        ("digitizer", "digit"),
        ("conformabli", "conform"),
        ("radicalli", "radic"),
        ("differentli", "differ"),
        ("vileli", "vile"),
        ("analogousli", "analog"),
        ("vietnamization", "vietnam"),
        ("predication", "predic"),
        ("operator", "oper"),
        ("feudalism", "feudal"),
        ("decisiveness", "decis"),
        ("hopefulness", "hope"),
        ("callousness", "callous"),
        ("formaliti", "formal"),
        ("sensitiviti", "sensit"),
        ("sensibiliti", "sensibl"),
        ("triplicate", "triplic"),
        ("formative", "form"),
        ("formalize", "formal"),
        ("electriciti", "electr"),
        ("electrical", "electr"),
        ("hopeful", "hope"),
        ("goodness", "good"),
        ("revival", "reviv"),
        ("allowance", "allow"),
        ("inference", "infer"),
        ("airliner", "airlin"),
        ("gyroscopic", "gyroscop"),
        ("adjustable", "adjust"),
        ("defensible", "defens"),
        ("irritant", "irrit"),
        ("replacement", "replac"),
        ("adjustment", "adjust"),
        ("dependent", "depend"),
        ("adoption", "adopt"),
        ("communism", "commun"),
        ("activate", "activ"),
        ("angulariti", "angular"),
        ("homologous", "homolog"),
        ("effective", "effect"),
        ("bowdlerize", "bowdler"),
        ("probate", "probat"),
        ("rate", "rate"),
        ("cease", "ceas"),
        ("controlling", "control"),
        ("rolling", "roll"),
        ("connect", "connect"),
        ("connected", "connect"),
        ("connecting", "connect"),
        ("connection", "connect"),
        ("connections", "connect"),
        ("crashes", "crash"),
        ("saving", "save"),
        ("file", "file"),
        ("running", "run"),
        ("flying", "fly"),
        ("generalization", "gener"),
        ("authentication", "authent"),
        ("serialization", "serial"),
        ("timeout", "timeout"),
        ("render", "render"),
        ("parsing", "pars"),
        ("http", "http"),
        ("404", "404"),
    ];

    #[test]
    fn matches_reference_pairs() {
        for (word, expected) in ORACLE {
            assert_eq!(stem(word), *expected, "stem({word:?})");
        }
    }

    #[test]
    fn short_words_unchanged() {
        for w in ["a", "is", "as", "do", "io"] {
            assert_eq!(stem(w), w);
        }
    }

    #[test]
    fn non_ascii_unchanged() {
        assert_eq!(stem("caf\u{e9}s"), "caf\u{e9}s");
    }

    #[test]
    fn known_non_fixpoints_restem_as_the_algorithm_dictates() {
        // The classic algorithm is not idempotent: a stem ending in a lone
        // "s" loses it on a second pass, and "agre" drops its final "e".
        assert_eq!(stem("pars"), "par");
        assert_eq!(stem("agre"), "agr");
    }

    #[test]
    fn common_stems_are_fixpoints() {
        for s in [
            "crash", "save", "file", "run", "connect", "render", "timeout", "motor", "hope",
            "control", "allow", "adjust", "depend", "size", "good", "digit", "formal",
        ] {
            assert_eq!(stem(s), s, "re-stem({s:?})");
        }
    }
}
