//! The product-attribute label schema.

use std::fmt;
use std::str::FromStr;

use crate::error::Error;

/// One of the 17 product attributes, or `None` for unlabeled nodes.
///
/// The declaration order is the fixed report order; `None` is last so that
/// `index()` of the 17 real labels is `0..17`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum AttributeLabel {
    ArticleParagraph,
    Headline,
    ProductBrand,
    ProductCons,
    ProductConsLabel,
    ProductContainer,
    ProductHook,
    ProductLink,
    ProductName,
    ProductOrdinal,
    ProductPrice,
    ProductPros,
    ProductProsLabel,
    ProductReview,
    ProductSeller,
    ProductBottomLine,
    ProductBottomLineLabel,
    None,
}

/// Number of output classes, including `None`.
pub const NUM_CLASSES: usize = 18;
/// Number of real attributes.
pub const NUM_ATTRIBUTES: usize = 17;

impl AttributeLabel {
    pub const ALL: [AttributeLabel; NUM_CLASSES] = [
        AttributeLabel::ArticleParagraph,
        AttributeLabel::Headline,
        AttributeLabel::ProductBrand,
        AttributeLabel::ProductCons,
        AttributeLabel::ProductConsLabel,
        AttributeLabel::ProductContainer,
        AttributeLabel::ProductHook,
        AttributeLabel::ProductLink,
        AttributeLabel::ProductName,
        AttributeLabel::ProductOrdinal,
        AttributeLabel::ProductPrice,
        AttributeLabel::ProductPros,
        AttributeLabel::ProductProsLabel,
        AttributeLabel::ProductReview,
        AttributeLabel::ProductSeller,
        AttributeLabel::ProductBottomLine,
        AttributeLabel::ProductBottomLineLabel,
        AttributeLabel::None,
    ];

    /// The 17 attributes in report order.
    pub fn attributes() -> &'static [AttributeLabel] {
        &Self::ALL[..NUM_ATTRIBUTES]
    }

    pub fn index(self) -> usize {
        self as usize
    }

    pub fn from_index(i: usize) -> Option<AttributeLabel> {
        Self::ALL.get(i).copied()
    }

    pub fn is_none(self) -> bool {
        self == AttributeLabel::None
    }

    pub fn as_str(self) -> &'static str {
        use AttributeLabel::*;
        match self {
            ArticleParagraph => "article_paragraph",
            Headline => "headline",
            ProductBrand => "product_brand",
            ProductCons => "product_cons",
            ProductConsLabel => "product_cons_label",
            ProductContainer => "product_container",
            ProductHook => "product_hook",
            ProductLink => "product_link",
            ProductName => "product_name",
            ProductOrdinal => "product_ordinal",
            ProductPrice => "product_price",
            ProductPros => "product_pros",
            ProductProsLabel => "product_pros_label",
            ProductReview => "product_review",
            ProductSeller => "product_seller",
            ProductBottomLine => "product_bottom_line",
            ProductBottomLineLabel => "product_bottom_line_label",
            None => "NONE",
        }
    }
}

impl fmt::Display for AttributeLabel {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for AttributeLabel {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        Self::ALL
            .iter()
            .copied()
            .find(|l| l.as_str() == s)
            .ok_or_else(|| Error::UnknownLabel(s.to_string()))
    }
}
