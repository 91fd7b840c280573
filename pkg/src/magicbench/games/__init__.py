from .social import (
    CHAMELEON_CREDITS,
    UNDERCOVER_CREDITS,
    ChameleonState,
    CodeOutOfRange,
    MissingGuess,
    UndercoverState,
    guess_matches,
    resolve_chameleon,
    resolve_undercover,
    role_credit,
)
from .theory import (
    Move,
    Overdraft,
    PDScoring,
    PGLedger,
    Proposal,
    ProposalError,
    VoteForMissingProposal,
    WrongPlayerCount,
    cs_fairness_check,
    cs_resolve_round,
    pd_payoffs,
    pg_settle,
    theory_winners,
)
from .voting import SelfVote, UnknownTarget, VoteError, VoteResult, tally_votes
