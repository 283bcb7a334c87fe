pub mod oracle;
pub mod props;
