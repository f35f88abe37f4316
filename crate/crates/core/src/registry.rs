//! Name-keyed registries of interchangeable strategies.
//!
//! Each algorithm family (accuracy scalings, zero-shot combiners, subset
//! selection modes) is a trait; concrete variants are registered under a
//! stable name and looked up at runtime from configuration or the CLI.

use std::fmt;
use std::sync::Arc;

use crate::error::{Error, Result};

/// Anything that can sit in a [`Registry`].
pub trait Named {
    fn name(&self) -> &'static str;
    fn description(&self) -> &'static str {
        ""
    }
}

/// Ordered collection of strategies. Insertion order is preserved so that
/// listings and tie-breaking by registration order are deterministic.
pub struct Registry<T: ?Sized + Named> {
    kind: &'static str,
    entries: Vec<Arc<T>>,
}

impl<T: ?Sized + Named> Registry<T> {
    pub fn new(kind: &'static str) -> Self {
        Self {
            kind,
            entries: Vec::new(),
        }
    }

    /// Register a strategy. A later registration with the same name replaces
    /// the earlier one in place.
    pub fn register(&mut self, strategy: Arc<T>) {
        match self.entries.iter().position(|e| e.name() == strategy.name()) {
            Some(i) => self.entries[i] = strategy,
            None => self.entries.push(strategy),
        }
    }

    pub fn with(mut self, strategy: Arc<T>) -> Self {
        self.register(strategy);
        self
    }

    pub fn get(&self, name: &str) -> Result<Arc<T>> {
        self.entries
            .iter()
            .find(|e| e.name() == name)
            .cloned()
            .ok_or_else(|| Error::UnknownStrategy {
                kind: self.kind,
                name: name.to_string(),
                valid: self.names().join("|"),
            })
    }

    pub fn names(&self) -> Vec<&'static str> {
        self.entries.iter().map(|e| e.name()).collect()
    }

    pub fn iter(&self) -> impl Iterator<Item = &Arc<T>> {
        self.entries.iter()
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }
}

impl<T: ?Sized + Named> fmt::Debug for Registry<T> {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("Registry")
            .field("kind", &self.kind)
            .field("entries", &self.names())
            .finish()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    trait Greeter: Named {
        fn greet(&self) -> String;
    }

    struct Hello(&'static str);
    impl Named for Hello {
        fn name(&self) -> &'static str {
            self.0
        }
    }
    impl Greeter for Hello {
        fn greet(&self) -> String {
            format!("hello from {}", self.0)
        }
    }

    #[test]
    fn lookup_and_listing() {
        let reg = Registry::<dyn Greeter>::new("greeter")
            .with(Arc::new(Hello("a")))
            .with(Arc::new(Hello("b")));
        assert_eq!(reg.names(), vec!["a", "b"]);
        assert_eq!(reg.get("b").unwrap().greet(), "hello from b");
        let err = reg.get("c").err().unwrap().to_string();
        assert!(err.contains("a|b"), "{err}");
    }

    #[test]
    fn re_registration_replaces_in_place() {
        let reg = Registry::<dyn Greeter>::new("greeter")
            .with(Arc::new(Hello("a")))
            .with(Arc::new(Hello("b")))
            .with(Arc::new(Hello("a")));
        assert_eq!(reg.len(), 2);
        assert_eq!(reg.names(), vec!["a", "b"]);
    }
}
