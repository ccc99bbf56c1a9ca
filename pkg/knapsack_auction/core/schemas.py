"""
JSON schemas for instances, bid profiles and outcomes.

Rationals are written as plain integers when their denominator is 1 and as
{"num": ..., "den": ...} otherwise. Both forms are accepted on input.
"""

from fractions import Fraction
from typing import Any, Dict, List, Union

from pydantic import BaseModel, field_validator

from .auction import AuctionInstance, Bidder, BidProfile
from .exceptions import AuctionInputError
from .payments import AuctionOutcome, BidderOutcome, PaymentRule


class RationalModel(BaseModel):
    num: int
    den: int = 1

    @field_validator("den")
    @classmethod
    def positive_denominator(cls, den: int) -> int:
        if den <= 0:
            raise ValueError("den must be positive")
        return den


RationalJSON = Union[int, RationalModel]


def encode_rational(value: Fraction) -> Union[int, Dict[str, int]]:
    value = Fraction(value)
    if value.denominator == 1:
        return value.numerator
    return {"num": value.numerator, "den": value.denominator}


def decode_rational(value: Any) -> Fraction:
    if isinstance(value, RationalModel):
        return Fraction(value.num, value.den)
    if isinstance(value, bool):
        raise AuctionInputError(f"Not a rational: {value!r}")
    if isinstance(value, int):
        return Fraction(value)
    if isinstance(value, dict):
        return decode_rational(RationalModel(**value))
    raise AuctionInputError(f"Not a rational: {value!r}")


class BidderModel(BaseModel):
    bidder_id: int
    size: RationalJSON
    value: RationalJSON


class InstanceModel(BaseModel):
    capacity: RationalJSON
    bidders: List[BidderModel]
    allow_trivial: bool = False

    def to_instance(self) -> AuctionInstance:
        return AuctionInstance(
            decode_rational(self.capacity),
            tuple(Bidder(b.bidder_id, decode_rational(b.size), decode_rational(b.value))
                  for b in self.bidders),
            self.allow_trivial,
        )

    @classmethod
    def from_instance(cls, instance: AuctionInstance) -> "InstanceModel":
        return cls(
            capacity=encode_rational(instance.capacity),
            bidders=[
                BidderModel(bidder_id=b.bidder_id, size=encode_rational(b.size),
                            value=encode_rational(b.value))
                for b in instance.bidders
            ],
            allow_trivial=instance.allow_trivial,
        )


class BidModel(BaseModel):
    bidder_id: int
    total_bid: RationalJSON


class BidProfileModel(BaseModel):
    bids: List[BidModel]

    def to_profile(self, instance: AuctionInstance) -> BidProfile:
        mapping = {}
        for bid in self.bids:
            if bid.bidder_id in mapping:
                raise AuctionInputError(f"Duplicate bid for bidder {bid.bidder_id}")
            mapping[bid.bidder_id] = decode_rational(bid.total_bid)
        return BidProfile.from_mapping(mapping, instance)

    @classmethod
    def from_profile(cls, profile: BidProfile) -> "BidProfileModel":
        return cls(bids=[BidModel(bidder_id=i, total_bid=encode_rational(b))
                         for i, b in enumerate(profile.bids)])


class BidderOutcomeModel(BaseModel):
    bidder_id: int
    is_winner: bool
    payment: RationalJSON
    payoff: RationalJSON


class OutcomeModel(BaseModel):
    rule: PaymentRule
    bidders: List[BidderOutcomeModel]
    revenue: RationalJSON
    no_rejected_bidder: bool = False

    def to_outcome(self) -> AuctionOutcome:
        return AuctionOutcome(
            rule=self.rule,
            bidders=tuple(
                BidderOutcome(b.bidder_id, b.is_winner, decode_rational(b.payment),
                              decode_rational(b.payoff))
                for b in self.bidders
            ),
            revenue=decode_rational(self.revenue),
            no_rejected_bidder=self.no_rejected_bidder,
        )

    @classmethod
    def from_outcome(cls, outcome: AuctionOutcome) -> "OutcomeModel":
        return cls(
            rule=outcome.rule,
            bidders=[
                BidderOutcomeModel(bidder_id=b.bidder_id, is_winner=b.is_winner,
                                   payment=encode_rational(b.payment),
                                   payoff=encode_rational(b.payoff))
                for b in outcome.bidders
            ],
            revenue=encode_rational(outcome.revenue),
            no_rejected_bidder=outcome.no_rejected_bidder,
        )


def instance_to_json(instance: AuctionInstance) -> Dict[str, Any]:
    return InstanceModel.from_instance(instance).model_dump()


def instance_from_json(data: Dict[str, Any]) -> AuctionInstance:
    return InstanceModel.model_validate(data).to_instance()


def profile_to_json(profile: BidProfile) -> Dict[str, Any]:
    return BidProfileModel.from_profile(profile).model_dump()


def profile_from_json(data: Dict[str, Any], instance: AuctionInstance) -> BidProfile:
    return BidProfileModel.model_validate(data).to_profile(instance)


def outcome_to_json(outcome: AuctionOutcome) -> Dict[str, Any]:
    return OutcomeModel.from_outcome(outcome).model_dump(mode="json")


def outcome_from_json(data: Dict[str, Any]) -> AuctionOutcome:
    return OutcomeModel.model_validate(data).to_outcome()
