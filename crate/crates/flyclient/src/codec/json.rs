//! Verbose JSON forms, mirroring the node RPC style: hashes, solutions and
//! work values as lowercase hex strings, compact targets as 8-digit hex.
//! Field names are fixed in `docs/rpc-schema.md`.

use serde_json::{json, Map, Value};

use crate::chainsim::{EngineKind, Header};
use crate::hash::Digest;
use crate::mmr::{AuxFields, MmrNode};
use crate::work::Work;

use super::binary::CodecError;
use super::distill::{DistilledHeader, DistilledNode};

pub fn header_value(h: &Header) -> Value {
    json!({
        "version": h.version,
        "previousblockhash": h.prev_hash.to_hex(),
        "merkleroot": h.merkle_root.to_hex(),
        "blockcommitments": h.block_commitments.to_hex(),
        "time": h.time,
        "bits": format!("{:08x}", h.bits),
        "nonce": hex::encode(h.nonce),
        "solution": hex::encode(&h.solution),
        "height": h.height,
    })
}

pub fn node_value(n: &MmrNode) -> Value {
    json!({
        "subtreecommitment": n.commitment.to_hex(),
        "earliesttimestamp": n.earliest_timestamp,
        "latesttimestamp": n.latest_timestamp,
        "earliesttargetbits": format!("{:08x}", n.earliest_target),
        "latesttargetbits": format!("{:08x}", n.latest_target),
        "earliestheight": n.earliest_height,
        "latestheight": n.latest_height,
        "subtreetotalwork": n.total_work.to_hex(),
        "earliestsaplingroot": n.aux.earliest_sapling_root.to_hex(),
        "latestsaplingroot": n.aux.latest_sapling_root.to_hex(),
        "saplingtxcount": n.aux.sapling_tx_count,
        "earliestorchardroot": n.aux.earliest_orchard_root.to_hex(),
        "latestorchardroot": n.aux.latest_orchard_root.to_hex(),
        "orchardtxcount": n.aux.orchard_tx_count,
    })
}

pub fn distilled_header_value(d: &DistilledHeader) -> Value {
    let mut map = Map::new();
    map.insert("headerhash".into(), d.header_hash.to_hex().into());
    map.insert("mixhash".into(), d.mixhash.to_hex().into());
    map.insert(
        "chainhistoryroot".into(),
        d.chain_history_root.to_hex().into(),
    );
    map.insert("targetbits".into(), format!("{:08x}", d.target_bits).into());
    map.insert("time".into(), d.time.into());
    if let Some(prev) = &d.prev_hash {
        map.insert("prevhash".into(), prev.to_hex().into());
    }
    Value::Object(map)
}

pub fn distilled_node_value(d: &DistilledNode) -> Value {
    json!({
        "internal": d.internal,
        "childcommitment": d.child_commitment.to_hex(),
        "earliesttimestamp": d.earliest_timestamp,
        "latesttimestamp": d.latest_timestamp,
        "earliesttargetbits": format!("{:08x}", d.earliest_target),
        "latesttargetbits": format!("{:08x}", d.latest_target),
        "earliestheight": d.earliest_height,
        "latestheight": d.latest_height,
        "subtreetotalwork": d.total_work.to_hex(),
        "otherfieldshash": d.other_fields_hash.to_hex(),
    })
}

fn field<'v>(v: &'v Value, name: &'static str) -> Result<&'v Value, CodecError> {
    v.get(name).ok_or(CodecError::InvalidField(name))
}

fn hex_digest(v: &Value, name: &'static str) -> Result<Digest, CodecError> {
    let s = field(v, name)?
        .as_str()
        .ok_or(CodecError::InvalidField(name))?;
    Digest::from_hex(s).map_err(|_| CodecError::InvalidField(name))
}

fn u64_field(v: &Value, name: &'static str) -> Result<u64, CodecError> {
    field(v, name)?
        .as_u64()
        .ok_or(CodecError::InvalidField(name))
}

fn bits_field(v: &Value, name: &'static str) -> Result<u32, CodecError> {
    let s = field(v, name)?
        .as_str()
        .ok_or(CodecError::InvalidField(name))?;
    u32::from_str_radix(s, 16).map_err(|_| CodecError::InvalidField(name))
}

pub fn header_from_value(v: &Value, engine: EngineKind) -> Result<Header, CodecError> {
    let solution_hex = field(v, "solution")?
        .as_str()
        .ok_or(CodecError::InvalidField("solution"))?;
    let solution = hex::decode(solution_hex).map_err(|_| CodecError::InvalidField("solution"))?;
    if solution.len() != engine.solution_len() {
        return Err(CodecError::SolutionLength {
            got: solution.len(),
            expect: engine.solution_len(),
        });
    }
    let nonce_hex = field(v, "nonce")?
        .as_str()
        .ok_or(CodecError::InvalidField("nonce"))?;
    let nonce: [u8; 32] = hex::decode(nonce_hex)
        .map_err(|_| CodecError::InvalidField("nonce"))?
        .try_into()
        .map_err(|_| CodecError::InvalidField("nonce"))?;
    Ok(Header {
        version: u64_field(v, "version")? as u32,
        prev_hash: hex_digest(v, "previousblockhash")?,
        merkle_root: hex_digest(v, "merkleroot")?,
        block_commitments: hex_digest(v, "blockcommitments")?,
        time: u64_field(v, "time")? as u32,
        bits: bits_field(v, "bits")?,
        nonce,
        solution,
        height: u64_field(v, "height")?,
    })
}

pub fn node_from_value(v: &Value) -> Result<MmrNode, CodecError> {
    let work_hex = field(v, "subtreetotalwork")?
        .as_str()
        .ok_or(CodecError::InvalidField("subtreetotalwork"))?;
    Ok(MmrNode {
        commitment: hex_digest(v, "subtreecommitment")?,
        earliest_timestamp: u64_field(v, "earliesttimestamp")? as u32,
        latest_timestamp: u64_field(v, "latesttimestamp")? as u32,
        earliest_target: bits_field(v, "earliesttargetbits")?,
        latest_target: bits_field(v, "latesttargetbits")?,
        earliest_height: u64_field(v, "earliestheight")?,
        latest_height: u64_field(v, "latestheight")?,
        total_work: Work::from_hex(work_hex)
            .map_err(|_| CodecError::InvalidField("subtreetotalwork"))?,
        aux: AuxFields {
            earliest_sapling_root: hex_digest(v, "earliestsaplingroot")?,
            latest_sapling_root: hex_digest(v, "latestsaplingroot")?,
            sapling_tx_count: u64_field(v, "saplingtxcount")?,
            earliest_orchard_root: hex_digest(v, "earliestorchardroot")?,
            latest_orchard_root: hex_digest(v, "latestorchardroot")?,
            orchard_tx_count: u64_field(v, "orchardtxcount")?,
        },
    })
}

pub fn distilled_header_from_value(v: &Value) -> Result<DistilledHeader, CodecError> {
    let prev_hash = match v.get("prevhash") {
        Some(_) => Some(hex_digest(v, "prevhash")?),
        None => None,
    };
    Ok(DistilledHeader {
        header_hash: hex_digest(v, "headerhash")?,
        mixhash: hex_digest(v, "mixhash")?,
        chain_history_root: hex_digest(v, "chainhistoryroot")?,
        target_bits: bits_field(v, "targetbits")?,
        time: u64_field(v, "time")? as u32,
        prev_hash,
    })
}

pub fn distilled_node_from_value(v: &Value) -> Result<DistilledNode, CodecError> {
    let work_hex = field(v, "subtreetotalwork")?
        .as_str()
        .ok_or(CodecError::InvalidField("subtreetotalwork"))?;
    Ok(DistilledNode {
        internal: field(v, "internal")?
            .as_bool()
            .ok_or(CodecError::InvalidField("internal"))?,
        child_commitment: hex_digest(v, "childcommitment")?,
        earliest_timestamp: u64_field(v, "earliesttimestamp")?,
        latest_timestamp: u64_field(v, "latesttimestamp")?,
        earliest_target: bits_field(v, "earliesttargetbits")?,
        latest_target: bits_field(v, "latesttargetbits")?,
        earliest_height: u64_field(v, "earliestheight")?,
        latest_height: u64_field(v, "latestheight")?,
        total_work: Work::from_hex(work_hex)
            .map_err(|_| CodecError::InvalidField("subtreetotalwork"))?,
        other_fields_hash: hex_digest(v, "otherfieldshash")?,
    })
}
