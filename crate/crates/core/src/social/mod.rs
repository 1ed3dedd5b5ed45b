//! Retweet graph, Louvain communities and the social-context signal.

mod graph;
mod labeling;
mod louvain;

pub use graph::{modularity, RetweetGraph, MIN_EDGE_WEIGHT};
pub use labeling::{
    label_communities, user_signal, Community, CommunityConfig, CommunityLabel, Membership, SocialContext,
    UserContext,
};
pub use louvain::{louvain_communities, Partition};
