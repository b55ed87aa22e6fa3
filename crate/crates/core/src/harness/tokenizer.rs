use crate::error::{Error, Result};
use crate::token::{TokenId, Vocab};

/// Character that encodes to the end-of-sequence token.
pub const EOS_CHAR: char = '\u{3}';

/// Character-level tokenizer over printable ASCII plus newline.
///
/// Ids `0..95` are `' '..='~'`, id 95 is `'\n'`, id 96 is EOS.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct CharTokenizer {
    alphabet: Vec<char>,
}

impl Default for CharTokenizer {
    fn default() -> Self {
        let mut alphabet: Vec<char> = (' '..='~').collect();
        alphabet.push('\n');
        alphabet.push(EOS_CHAR);
        CharTokenizer { alphabet }
    }
}

impl CharTokenizer {
    pub fn vocab(&self) -> Vocab {
        Vocab::new(self.alphabet.len(), self.eos()).expect("alphabet has at least two symbols")
    }

    pub fn eos(&self) -> TokenId {
        TokenId(self.alphabet.len() as u32 - 1)
    }

    pub fn encode_char(&self, c: char) -> Result<TokenId> {
        let id = match c {
            ' '..='~' => c as u32 - ' ' as u32,
            '\n' => 95,
            EOS_CHAR => 96,
            _ => return Err(Error::UnknownChar(c)),
        };
        Ok(TokenId(id))
    }

    pub fn encode(&self, text: &str) -> Result<Vec<TokenId>> {
        text.chars().map(|c| self.encode_char(c)).collect()
    }

    /// `None` for EOS and out-of-range ids.
    pub fn char_of(&self, token: TokenId) -> Option<char> {
        if token == self.eos() {
            return None;
        }
        self.alphabet.get(token.index()).copied()
    }

    /// Decodes text, dropping EOS and ids outside the alphabet.
    pub fn decode(&self, tokens: &[TokenId]) -> String {
        tokens.iter().filter_map(|&t| self.char_of(t)).collect()
    }
}
