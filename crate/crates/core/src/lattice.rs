//! Origin-centred boxes of `Z^2`, the even sublattice and its complement.

use alloc::vec;
use alloc::vec::Vec;
use core::fmt;

use crate::error::{Error, Result};

/// A point of `Z^2`; `x` is the horizontal (first) coordinate.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Site {
    pub x: i32,
    pub y: i32,
}

impl Site {
    pub const ORIGIN: Site = Site { x: 0, y: 0 };

    pub const fn new(x: i32, y: i32) -> Self {
        Self { x, y }
    }

    pub fn distance(self, other: Site) -> f64 {
        let dx = f64::from(self.x) - f64::from(other.x);
        let dy = f64::from(self.y) - f64::from(other.y);
        libm::sqrt(dx * dx + dy * dy)
    }

    /// Sup-norm `max(|x|, |y|)`: the smallest `L` with `self` in `Λ_L`.
    pub const fn sup_norm(self) -> u32 {
        let (a, b) = (self.x.unsigned_abs(), self.y.unsigned_abs());
        if a > b {
            a
        } else {
            b
        }
    }

    pub const fn is_even(self) -> bool {
        self.x % 2 == 0 && self.y % 2 == 0
    }

    /// `(-1)^(x + y)`.
    pub const fn parity_sign(self) -> i8 {
        if (self.x + self.y) % 2 == 0 {
            1
        } else {
            -1
        }
    }

    pub const fn offset(self, dx: i32, dy: i32) -> Site {
        Site::new(self.x + dx, self.y + dy)
    }
}

impl fmt::Display for Site {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "({}, {})", self.x, self.y)
    }
}

/// The box `([-L, L] ∩ Z)^2`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct BoxRegion {
    half_width: u32,
}

impl BoxRegion {
    pub const fn new(half_width: u32) -> Self {
        Self { half_width }
    }

    pub const fn half_width(self) -> u32 {
        self.half_width
    }

    /// Number of sites along one side, `2L + 1`.
    pub const fn side(self) -> usize {
        2 * self.half_width as usize + 1
    }

    pub const fn len(self) -> usize {
        self.side() * self.side()
    }

    pub const fn is_empty(self) -> bool {
        false
    }

    pub const fn contains(self, site: Site) -> bool {
        site.sup_norm() <= self.half_width
    }

    /// Row-major index: rows run over `y` from `-L` to `L`, columns over `x`.
    #[inline]
    pub fn index(self, site: Site) -> Option<usize> {
        if !self.contains(site) {
            return None;
        }
        Some(self.index_unchecked(site))
    }

    #[inline]
    pub(crate) fn index_unchecked(self, site: Site) -> usize {
        let l = self.half_width as i64;
        let side = self.side() as i64;
        ((i64::from(site.y) + l) * side + (i64::from(site.x) + l)) as usize
    }

    #[inline]
    pub fn site(self, index: usize) -> Site {
        let side = self.side();
        let l = self.half_width as i32;
        Site::new((index % side) as i32 - l, (index / side) as i32 - l)
    }

    /// All sites in row-major order.
    pub fn sites(self) -> impl Iterator<Item = Site> + Clone {
        let l = self.half_width as i32;
        (-l..=l).flat_map(move |y| (-l..=l).map(move |x| Site::new(x, y)))
    }
}

/// A subset of a bounding box, iterated in row-major order.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct SiteSet {
    bounds: BoxRegion,
    mask: Vec<bool>,
    count: usize,
}

impl SiteSet {
    pub fn empty(bounds: BoxRegion) -> Self {
        Self {
            bounds,
            mask: vec![false; bounds.len()],
            count: 0,
        }
    }

    pub fn full(bounds: BoxRegion) -> Self {
        Self {
            bounds,
            mask: vec![true; bounds.len()],
            count: bounds.len(),
        }
    }

    pub fn from_predicate(bounds: BoxRegion, mut keep: impl FnMut(Site) -> bool) -> Self {
        let mask: Vec<bool> = bounds.sites().map(&mut keep).collect();
        let count = mask.iter().filter(|&&b| b).count();
        Self {
            bounds,
            mask,
            count,
        }
    }

    pub fn bounds(&self) -> BoxRegion {
        self.bounds
    }

    pub fn len(&self) -> usize {
        self.count
    }

    pub fn is_empty(&self) -> bool {
        self.count == 0
    }

    pub fn contains(&self, site: Site) -> bool {
        self.bounds.index(site).is_some_and(|i| self.mask[i])
    }

    pub(crate) fn contains_index(&self, index: usize) -> bool {
        self.mask[index]
    }

    /// Adds `site`; returns whether it was newly inserted.
    pub fn insert(&mut self, site: Site) -> Result<bool> {
        let i = self.bounds.index(site).ok_or(Error::OutsideWindow(site))?;
        let fresh = !self.mask[i];
        if fresh {
            self.mask[i] = true;
            self.count += 1;
        }
        Ok(fresh)
    }

    pub fn remove(&mut self, site: Site) -> bool {
        match self.bounds.index(site) {
            Some(i) if self.mask[i] => {
                self.mask[i] = false;
                self.count -= 1;
                true
            }
            _ => false,
        }
    }

    pub fn iter(&self) -> impl Iterator<Item = Site> + '_ {
        self.mask
            .iter()
            .enumerate()
            .filter(|(_, &m)| m)
            .map(|(i, _)| self.bounds.site(i))
    }

    pub fn is_subset(&self, other: &SiteSet) -> bool {
        self.iter().all(|s| other.contains(s))
    }

    pub fn union(&self, other: &SiteSet) -> SiteSet {
        let bounds = if self.bounds.half_width() >= other.bounds.half_width() {
            self.bounds
        } else {
            other.bounds
        };
        SiteSet::from_predicate(bounds, |s| self.contains(s) || other.contains(s))
    }
}

/// Sites of the box with both coordinates even (the visible sites `2Z^2`).
pub fn even_sublattice(region: BoxRegion) -> SiteSet {
    SiteSet::from_predicate(region, Site::is_even)
}

/// Sites of the box outside `2Z^2`, plus the origin when `include_origin`.
pub fn invisible_sites(region: BoxRegion, include_origin: bool) -> SiteSet {
    SiteSet::from_predicate(region, |s| {
        !s.is_even() || (include_origin && s == Site::ORIGIN)
    })
}

/// `outer \ inner` for origin-centred boxes.
pub fn annulus(inner: BoxRegion, outer: BoxRegion) -> Result<SiteSet> {
    if outer.half_width() <= inner.half_width() {
        return Err(Error::DegenerateAnnulus {
            inner: inner.half_width().into(),
            outer: outer.half_width().into(),
        });
    }
    Ok(SiteSet::from_predicate(outer, |s| !inner.contains(s)))
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn even_sublattice_examples() {
        let s0 = even_sublattice(BoxRegion::new(0));
        assert_eq!(s0.iter().collect::<Vec<_>>(), vec![Site::ORIGIN]);
        let s2 = even_sublattice(BoxRegion::new(2));
        assert_eq!(s2.len(), 9);
        assert!(s2.contains(Site::new(-2, -2)) && s2.contains(Site::new(2, 0)));
        let s1 = even_sublattice(BoxRegion::new(1));
        assert_eq!(s1.iter().collect::<Vec<_>>(), vec![Site::ORIGIN]);
    }

    #[test]
    fn invisible_site_examples() {
        assert_eq!(invisible_sites(BoxRegion::new(1), true).len(), 9);
        assert_eq!(invisible_sites(BoxRegion::new(2), false).len(), 16);
        let with_origin = invisible_sites(BoxRegion::new(2), true);
        assert_eq!(with_origin.len(), 17);
        assert!(with_origin.contains(Site::ORIGIN));
        assert!(!with_origin.contains(Site::new(2, 0)));
    }

    #[test]
    fn annulus_examples() {
        assert_eq!(
            annulus(BoxRegion::new(0), BoxRegion::new(1)).unwrap().len(),
            8
        );
        assert_eq!(
            annulus(BoxRegion::new(1), BoxRegion::new(2)).unwrap().len(),
            16
        );
        assert!(matches!(
            annulus(BoxRegion::new(2), BoxRegion::new(2)),
            Err(Error::DegenerateAnnulus { .. })
        ));
    }

    #[test]
    fn row_major_order() {
        let b = BoxRegion::new(1);
        let sites: Vec<Site> = b.sites().collect();
        assert_eq!(sites[0], Site::new(-1, -1));
        assert_eq!(sites[1], Site::new(0, -1));
        assert_eq!(sites[3], Site::new(-1, 0));
        for (i, s) in sites.iter().enumerate() {
            assert_eq!(b.index(*s), Some(i));
            assert_eq!(b.site(i), *s);
        }
        assert_eq!(b.index(Site::new(2, 0)), None);
    }

    #[test]
    fn distance_basics() {
        let a = Site::new(1, 2);
        assert_eq!(a.distance(a), 0.0);
        assert_eq!(Site::new(0, 0).distance(Site::new(3, 4)), 5.0);
        assert_eq!(a.distance(Site::new(-2, 6)), Site::new(-2, 6).distance(a));
    }

    proptest! {
        #[test]
        fn even_and_invisible_partition(l in 0u32..12) {
            let b = BoxRegion::new(l);
            let even = even_sublattice(b);
            let odd = invisible_sites(b, false);
            prop_assert_eq!(even.len() + odd.len(), b.len());
            for s in b.sites() {
                prop_assert!(even.contains(s) != odd.contains(s));
            }
        }

        #[test]
        fn annulus_size(l in 0u32..10, extra in 1u32..10) {
            let n = l + extra;
            let a = annulus(BoxRegion::new(l), BoxRegion::new(n)).unwrap();
            let side = |w: u32| (2 * w as usize + 1).pow(2);
            prop_assert_eq!(a.len(), side(n) - side(l));
        }

        #[test]
        fn even_sublattice_shift_covariance(l in 2u32..10) {
            let b = BoxRegion::new(l);
            let even = even_sublattice(b);
            for s in even.iter() {
                let t = s.offset(2, 0);
                if b.contains(t) {
                    prop_assert!(even.contains(t));
                }
            }
        }
    }
}
